#include "oulab/domain.hpp"

#include <cmath>

namespace oulab {

double ConvexDomain::g(const Vec& x) const {
    if (kind == Kind::quad) return x.dot(M * x);
    return g_fn(x);
}

Vec ConvexDomain::g_grad(const Vec& x) const {
    if (kind == Kind::quad) return 2.0 * (M * x);
    return g_grad_fn(x);
}

ConvexDomain make_ball_domain(int dim, double r) {
    if (!(r > 0.0)) throw Error(ErrorKind::invalid_input, "ball domain: r must be > 0");
    ConvexDomain d;
    d.kind = ConvexDomain::Kind::quad;
    d.name = "ball";
    d.dim = dim;
    d.r = r;
    d.M = Mat::Identity(dim, dim);
    d.growth_a = 1.0;
    d.growth_b = 2.0;
    d.bounding_radius = std::sqrt(r) * 1.0000001;
    return d;
}

ConvexDomain make_ellipsoid_domain(const Mat& M, double r) {
    if (!(r > 0.0)) throw Error(ErrorKind::invalid_input, "ellipsoid domain: r must be > 0");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0))
        throw Error(ErrorKind::invalid_input, "ellipsoid domain: M must be SPD");
    ConvexDomain d;
    d.kind = ConvexDomain::Kind::quad;
    d.name = "ellipsoid";
    d.dim = static_cast<int>(M.rows());
    d.r = r;
    d.M = 0.5 * (M + M.transpose());
    const double lmax = es.eigenvalues().maxCoeff();
    d.growth_a = 1.0;
    d.growth_b = std::max(2.0, 2.0 * lmax);
    d.bounding_radius = std::sqrt(r / lmin) * 1.0000001;
    return d;
}

ConvexDomain make_custom_domain(int dim, double r,
                                std::function<double(const Vec&)> g,
                                std::function<Vec(const Vec&)> g_grad,
                                double growth_a, double growth_b,
                                double bounding_radius) {
    ConvexDomain d;
    d.kind = ConvexDomain::Kind::custom;
    d.name = "custom";
    d.dim = dim;
    d.r = r;
    d.g_fn = std::move(g);
    d.g_grad_fn = std::move(g_grad);
    d.growth_a = growth_a;
    d.growth_b = growth_b;
    d.bounding_radius = bounding_radius;
    return d;
}

void validate_domain(const ConvexDomain& domain, std::uint64_t seed, int samples) {
    const int d = domain.dim;
    const Vec zero = Vec::Zero(d);
    if (std::abs(domain.g(zero)) > 1e-12)
        throw Error(ErrorKind::domain, "domain: g(0) != 0");
    if (!(domain.bounding_radius > 0.0))
        throw Error(ErrorKind::domain, "domain: bounding radius must be declared positive");

    NormalStream ns(philox_key(seed, 0xD0A11u), 0);
    auto draw = [&](double scale) {
        Vec v(d);
        for (int c = 0; c < d; ++c) v(c) = scale * ns.next();
        return v;
    };
    for (int k = 0; k < samples; ++k) {
        const double scale = (k % 4 == 0) ? 0.1 : (k % 4 == 1 ? 1.0 : 3.0);
        const Vec x = draw(scale);
        if (x.norm() < 1e-8) continue;
        const double gx = domain.g(x);
        const Vec gr = domain.g_grad(x);
        if (!(gx > 0.0))
            throw Error(ErrorKind::domain, "domain: g(x) <= 0 at a sampled x != 0");
        if (!(gr.norm() > 0.0))
            throw Error(ErrorKind::domain, "domain: g'(x) = 0 at a sampled x != 0");
        if (gx + gr.norm() > domain.growth_a + std::exp(domain.growth_b * x.norm()))
            throw Error(ErrorKind::domain, "domain: growth bound a + e^{b|x|} violated");
        const Vec y = draw(scale);
        if (domain.g(0.5 * (x + y)) > 0.5 * (domain.g(x) + domain.g(y)) + 1e-10)
            throw Error(ErrorKind::domain, "domain: midpoint convexity violated");
        // boundedness: points on the declared radius must be outside {g <= r}
        const Vec dir = x / x.norm();
        if (domain.g(domain.bounding_radius * dir) <= domain.r)
            throw Error(ErrorKind::domain,
                        "domain: {g <= r} not inside the declared bounding radius");
    }
}

double gamma_sup(const ConvexDomain& domain, const Vec& path, const Vec& shift,
                 const Vec& x0_value) {
    const int d = domain.dim;
    const int N = static_cast<int>(path.size()) / d;
    double best = domain.g(x0_value);
    Vec k(d);
    for (int j = 0; j < N; ++j) {
        k = path.segment(j * d, d) + shift.segment(j * d, d);
        const double v = domain.g(k);
        if (v > best) best = v;
    }
    return best;
}

double gamma_grad_dir(const ConvexDomain& domain, const Vec& path,
                      const Vec& shift, const Vec& x0_value,
                      const Vec& direction) {
    const int d = domain.dim;
    const int N = static_cast<int>(path.size()) / d;
    double best = domain.g(x0_value);
    int jstar = 0;
    Vec k(d), kstar(d);
    for (int j = 0; j < N; ++j) {
        k = path.segment(j * d, d) + shift.segment(j * d, d);
        const double v = domain.g(k);
        if (v > best) {
            best = v;
            jstar = j + 1;
            kstar = k;
        }
    }
    if (jstar == 0) return 0.0;  // t_0 term does not depend on the path
    return domain.g_grad(kstar).dot(direction.segment((jstar - 1) * d, d));
}

}  // namespace oulab
