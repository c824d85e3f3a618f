#include "oulab/pde.hpp"

#include <algorithm>
#include <cmath>

namespace oulab {

namespace {

void check_ex1_structure(const OUModel& model) {
    if (model.dim != 2)
        throw Error(ErrorKind::model, "pde: solver is 2D only");
    const Mat& C = model.C;
    if (std::abs(C(0, 1)) > 1e-14 || std::abs(C(1, 0)) > 1e-14 ||
        std::abs(C(1, 1)) > 1e-14 || !(C(0, 0) > 0.0))
        throw Error(ErrorKind::model,
                    "pde: requires diffusion in the first coordinate only (C = diag(c, 0))");
}

}  // namespace

double PdeSolution::value_at(const Vec& x) const {
    const double fx = (x(0) - mesh.x1_min) / mesh.dx1();
    const double fy = (x(1) - mesh.x2_min) / mesh.dx2();
    const int i = std::clamp(static_cast<int>(fx), 0, mesh.n1 - 2);
    const int j = std::clamp(static_cast<int>(fy), 0, mesh.n2 - 2);
    const double ax = std::clamp(fx - i, 0.0, 1.0);
    const double ay = std::clamp(fy - j, 0.0, 1.0);
    auto U = [&](int a, int b) { return u[static_cast<std::size_t>(a) * mesh.n2 + b]; };
    return (1 - ax) * (1 - ay) * U(i, j) + ax * (1 - ay) * U(i + 1, j) +
           (1 - ax) * ay * U(i, j + 1) + ax * ay * U(i + 1, j + 1);
}

Vec PdeSolution::gradient_at(const Vec& x) const {
    Vec g(2);
    Vec xp = x, xm = x;
    xp(0) += mesh.dx1();
    xm(0) -= mesh.dx1();
    g(0) = (value_at(xp) - value_at(xm)) / (2.0 * mesh.dx1());
    xp = x;
    xm = x;
    xp(1) += mesh.dx2();
    xm(1) -= mesh.dx2();
    g(1) = (value_at(xp) - value_at(xm)) / (2.0 * mesh.dx2());
    return g;
}

PdeSolution solve_dirichlet_2d(const OUModel& model, const ConvexDomain& domain,
                               const TestFunction& phi, double T,
                               const Mesh2D& mesh) {
    check_ex1_structure(model);
    const int n1 = mesh.n1, n2 = mesh.n2;
    const double dx1 = mesh.dx1(), dx2 = mesh.dx2();
    const double c = model.C(0, 0);

    // Node classification and drift field b = A xi.
    std::vector<char> interior(static_cast<std::size_t>(n1) * n2, 0);
    std::vector<double> b1(interior.size()), b2(interior.size());
    double cfl_rate = 0.0;  // max over nodes of c/dx1^2 + |b1|/dx1 + |b2|/dx2
    Vec xi(2);
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            xi(0) = mesh.x1_min + i * dx1;
            xi(1) = mesh.x2_min + j * dx2;
            const std::size_t id = static_cast<std::size_t>(i) * n2 + j;
            interior[id] = domain.g(xi) < domain.r ? 1 : 0;
            const Vec b = model.A * xi;
            b1[id] = b(0);
            b2[id] = b(1);
            if (interior[id])
                cfl_rate = std::max(cfl_rate, c / (dx1 * dx1) + std::abs(b(0)) / dx1 +
                                                  std::abs(b(1)) / dx2);
        }
    }
    const double dt_stable = 0.9 / cfl_rate;
    double dt = mesh.dt > 0.0 ? mesh.dt : dt_stable;
    if (dt > dt_stable + 1e-15)
        throw Error(ErrorKind::invalid_input,
                    "pde: CFL violation; largest stable dt is " + std::to_string(dt_stable));
    const std::int64_t steps = static_cast<std::int64_t>(std::ceil(T / dt - 1e-12));
    dt = T / static_cast<double>(steps);

    PdeSolution sol;
    sol.mesh = mesh;
    sol.T = T;
    sol.dt = dt;
    sol.steps = steps;
    sol.u.assign(interior.size(), 0.0);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const std::size_t id = static_cast<std::size_t>(i) * n2 + j;
            if (interior[id]) {
                xi(0) = mesh.x1_min + i * dx1;
                xi(1) = mesh.x2_min + j * dx2;
                sol.u[id] = phi(xi);
            }
        }

    std::vector<double> next(sol.u.size(), 0.0);
    auto U = [&](int a, int b_) -> double {
        return sol.u[static_cast<std::size_t>(a) * n2 + b_];
    };
    for (std::int64_t s = 0; s < steps; ++s) {
        for (int i = 1; i < n1 - 1; ++i) {
            for (int j = 1; j < n2 - 1; ++j) {
                const std::size_t id = static_cast<std::size_t>(i) * n2 + j;
                if (!interior[id]) continue;
                const double uc = U(i, j);
                const double diff = 0.5 * c * (U(i + 1, j) - 2.0 * uc + U(i - 1, j)) /
                                    (dx1 * dx1);
                // upwind in the flow direction: forward difference when the
                // drift is positive (domain of dependence lies ahead)
                const double t1 = b1[id] >= 0.0
                                      ? b1[id] * (U(i + 1, j) - uc) / dx1
                                      : b1[id] * (uc - U(i - 1, j)) / dx1;
                const double t2 = b2[id] >= 0.0
                                      ? b2[id] * (U(i, j + 1) - uc) / dx2
                                      : b2[id] * (uc - U(i, j - 1)) / dx2;
                next[id] = uc + dt * (diff + t1 + t2);
            }
        }
        std::swap(sol.u, next);
    }
    return sol;
}

std::vector<McPdeComparison> compare_mc_pde(const OUModel& model,
                                            const ConvexDomain& domain,
                                            const TestFunction& phi, double T,
                                            const Mesh2D& mesh,
                                            const std::vector<Vec>& states,
                                            int mc_level, const McOptions& opt) {
    const PdeSolution sol = solve_dirichlet_2d(model, domain, phi, T, mesh);
    const DyadicGrid grid = DyadicGrid::make(T, mc_level);
    std::vector<McPdeComparison> out;
    for (std::size_t k = 0; k < states.size(); ++k) {
        McOptions o = opt;
        o.stream = opt.stream + static_cast<std::uint32_t>(k);
        const EstimatorResult mc = stopped_direct(model, domain, phi, states[k], grid, o);
        McPdeComparison cmp;
        cmp.x = states[k];
        cmp.pde = sol.value_at(states[k]);
        cmp.mc = mc.mean;
        cmp.mc_se = mc.stderr_;
        cmp.gap = cmp.pde - cmp.mc;
        cmp.gap_in_se = mc.stderr_ > 0.0 ? std::abs(cmp.gap) / mc.stderr_ : 0.0;
        out.push_back(cmp);
    }
    return out;
}

}  // namespace oulab
