#include "oulab/gradient.hpp"

#include <chrono>
#include <cmath>

#include "oulab/mathutil.hpp"
#include "oulab/sweep.hpp"

namespace oulab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

GaugeTrack shift_gauge(const ShiftKernel& kernel, const ConvexDomain& domain,
                       const Vec& x, const Vec* dir_of_y = nullptr) {
    const int N = kernel.grid().steps();
    GaugeTrack g;
    g.domain = &domain;
    g.shift.resize(N + 1);
    for (int j = 0; j <= N; ++j) g.shift[j] = kernel.d(x, j);
    if (dir_of_y) {
        g.dir.resize(N + 1);
        for (int j = 0; j <= N; ++j) g.dir[j] = kernel.d(*dir_of_y, j);
    }
    return g;
}

DotTrack u_dot(const ShiftKernel& kernel, const Vec& x) {
    const int N = kernel.grid().steps();
    DotTrack t;
    t.coeff.resize(N);
    t.scale.assign(N, kernel.grid().dt());
    for (int j = 1; j <= N; ++j) t.coeff[j - 1] = kernel.u(x, j);
    return t;
}

void require_inside(const ConvexDomain& domain, const Vec& x, const char* who) {
    if (!domain.contains_closure(x))
        throw Error(ErrorKind::domain, std::string(who) + ": point outside the closed domain");
}

}  // namespace

EstimatorResult interior_term(const ShiftKernel& kernel,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt) {
    const auto t0 = Clock::now();
    require_inside(domain, x, "interior_term");
    const OUModel& model = kernel.model();
    const int d = model.dim;
    const double F = kernel.F(x);
    const double Fxy = kernel.Fx(x, y);
    const double r = domain.r;

    SweepSpec spec;
    spec.model = &model;
    spec.grid = kernel.grid();
    spec.opt = opt;
    spec.gauges.push_back(shift_gauge(kernel, domain, x));
    spec.dots.push_back(u_dot(kernel, x));  // G^n(x,h)
    spec.dots.push_back(u_dot(kernel, y));  // G^n(y,h) = G^n_x . y

    auto sr = run_sweep(spec, 1, [&](const PathView& v, double* out) {
        Vec xi(d);
        for (int i = 0; i < v.count; ++i) {
            if (v.gauge_max[0][i] > r) {
                out[i] = 0.0;
                continue;
            }
            for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i);
            const double w = std::exp(-0.5 * F + v.dot_acc[0][i]);
            out[i] = phi(xi) * w * (-0.5 * Fxy + v.dot_acc[1][i]);
        }
    });
    EstimatorResult res;
    std::tie(res.mean, res.stderr_) = mean_se(sr.sum[0], sr.sumsq[0], sr.m);
    res.m = opt.m;
    res.seed = opt.seed;
    res.wall_ms = elapsed_ms(t0);
    return res;
}

namespace {

struct ShellSums {
    double sum_val = 0.0, sumsq_val = 0.0;    // shell integrand / (2 eps)
    double sum_ind = 0.0;                     // shell indicator
    double sum_raw = 0.0, sumsq_raw = 0.0;    // integrand without the 1/(2 eps)
    std::int64_t m = 0;
};

ShellSums shell_pass(const ShiftKernel& kernel, const ConvexDomain& domain,
                     const TestFunction& phi, const Vec& x, const Vec& y,
                     const McOptions& opt, double eps,
                     GradConfig::WeightVariant variant) {
    require_inside(domain, x, "boundary term");
    if (!(eps > 0.0)) throw Error(ErrorKind::invalid_input, "boundary term: eps <= 0");
    const OUModel& model = kernel.model();
    const int d = model.dim;
    const double F = kernel.F(x);
    const double r = domain.r;
    const bool weighted = variant == GradConfig::WeightVariant::cm_weighted;

    SweepSpec spec;
    spec.model = &model;
    spec.grid = kernel.grid();
    spec.opt = opt;
    spec.gauges.push_back(shift_gauge(kernel, domain, x, &y));
    spec.dots.push_back(u_dot(kernel, x));

    auto sr = run_sweep(spec, 3, [&](const PathView& v, double* out) {
        Vec xi(d);
        double* o_val = out;
        double* o_ind = out + v.count;
        double* o_raw = out + 2 * v.count;
        for (int i = 0; i < v.count; ++i) {
            const double gm = v.gauge_max[0][i];
            if (gm > r - eps && gm <= r + eps) {
                for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i);
                const double w =
                    weighted ? std::exp(-0.5 * F + v.dot_acc[0][i]) : 1.0;
                const double raw = phi(xi) * w * v.gauge_cstar[0][i];
                o_raw[i] = raw;
                o_val[i] = raw / (2.0 * eps);
                o_ind[i] = 1.0;
            } else {
                o_val[i] = o_ind[i] = o_raw[i] = 0.0;
            }
        }
    });
    ShellSums s;
    s.sum_val = sr.sum[0];
    s.sumsq_val = sr.sumsq[0];
    s.sum_ind = sr.sum[1];
    s.sum_raw = sr.sum[2];
    s.sumsq_raw = sr.sumsq[2];
    s.m = sr.m;
    return s;
}

}  // namespace

BoundaryResult boundary_shell(const ShiftKernel& kernel,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt, double eps,
                              GradConfig::WeightVariant variant) {
    const auto t0 = Clock::now();
    const ShellSums s = shell_pass(kernel, domain, phi, x, y, opt, eps, variant);
    BoundaryResult br;
    br.shell_count = std::llround(s.sum_ind);
    br.empty_shell = br.shell_count == 0;
    std::tie(br.est.mean, br.est.stderr_) = mean_se(s.sum_val, s.sumsq_val, s.m);
    br.est.m = s.m;
    br.est.seed = opt.seed;
    br.est.wall_ms = elapsed_ms(t0);
    return br;
}

BoundaryResult boundary_conditional(const ShiftKernel& kernel,
                                    const ConvexDomain& domain,
                                    const TestFunction& phi, const Vec& x,
                                    const Vec& y, const McOptions& opt,
                                    double eps,
                                    GradConfig::WeightVariant variant) {
    const auto t0 = Clock::now();
    const ShellSums s = shell_pass(kernel, domain, phi, x, y, opt, eps, variant);
    BoundaryResult br;
    br.shell_count = std::llround(s.sum_ind);
    br.empty_shell = br.shell_count == 0;
    br.est.m = s.m;
    br.est.seed = opt.seed;
    if (br.empty_shell) {
        br.est.wall_ms = elapsed_ms(t0);
        return br;
    }
    const double m = static_cast<double>(s.m);
    const double cnt = s.sum_ind;
    const double p_shell = cnt / m;                       // shell mass
    const double dens = p_shell / (2.0 * eps);            // D^+ Lambda(r) estimate
    const double dens_se = std::sqrt(std::max(p_shell * (1.0 - p_shell), 0.0) / m) /
                           (2.0 * eps);
    const double avg = s.sum_raw / cnt;                   // E[. | Gamma = r] estimate
    double avg_var = (s.sumsq_raw / cnt - avg * avg) / cnt;
    if (avg_var < 0.0) avg_var = 0.0;
    br.est.mean = avg * dens;
    br.est.stderr_ = std::sqrt(avg * avg * dens_se * dens_se + dens * dens * avg_var);
    br.est.wall_ms = elapsed_ms(t0);
    return br;
}

GradResult grad_main(const ShiftKernel& kernel, const ConvexDomain& domain,
                     const TestFunction& phi, const Vec& x, const Vec& y,
                     const McOptions& opt, const GradConfig& cfg) {
    const double eps = cfg.shell_eps > 0.0 ? cfg.shell_eps : domain.r / 40.0;
    McOptions o_in = opt;
    McOptions o_bd = opt;
    o_bd.stream = opt.stream + 1;  // disjoint streams: errors combine in quadrature

    GradResult gr;
    gr.config = cfg;
    gr.interior = interior_term(kernel, domain, phi, x, y, o_in);
    BoundaryResult br;
    if (cfg.boundary_method == GradConfig::BoundaryMethod::shell)
        br = boundary_shell(kernel, domain, phi, x, y, o_bd, eps, cfg.weight_variant);
    else
        br = boundary_conditional(kernel, domain, phi, x, y, o_bd, eps,
                                  cfg.weight_variant);
    gr.boundary = br.est;
    gr.shell_count = br.shell_count;
    const double sgn = cfg.boundary_sign == GradConfig::BoundarySign::plus ? 1.0 : -1.0;
    gr.total = gr.interior.mean + sgn * gr.boundary.mean;
    gr.total_stderr = std::hypot(gr.interior.stderr_, gr.boundary.stderr_);
    return gr;
}

GradResult grad_discrete_full(const ShiftKernel& kernel,
                              const GridGaussian& gg,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt) {
    require_inside(domain, x, "grad_discrete_full");
    const OUModel& model = kernel.model();
    const DyadicGrid& grid = kernel.grid();
    if (grid.level > 8)
        throw Error(ErrorKind::conditioning,
                    "grad_discrete_full: n capped at 8 (explicit grid inverse)");
    const int d = model.dim;
    const int N = grid.steps();
    const double dt = grid.dt();
    const double F = kernel.F(x);
    const double Fxy = kernel.Fx(x, y);
    const double r = domain.r;

    // v = Q_{T,n}^{-1} (d(y, t_1..t_N)) for the M2 kernel sum_j v_j . h(t_j).
    Vec eta(N * d);
    for (int j = 1; j <= N; ++j) eta.segment((j - 1) * d, d) = kernel.d(y, j);
    const Vec v = gg.solve(eta);

    // G^n_h(x,h) . d(y,.) is h-independent: sum_j (u(x,t_j) . d(y,t_j)) dt.
    double gterm = 0.0;
    for (int j = 1; j <= N; ++j) gterm += dt * kernel.u(x, j).dot(kernel.d(y, j));

    // M1 pass.
    SweepSpec spec1;
    spec1.model = &model;
    spec1.grid = grid;
    spec1.opt = opt;
    spec1.gauges.push_back(shift_gauge(kernel, domain, x));
    spec1.dots.push_back(u_dot(kernel, x));
    spec1.dots.push_back(u_dot(kernel, y));
    auto sr1 = run_sweep(spec1, 1, [&](const PathView& pv, double* out) {
        Vec xi(d);
        for (int i = 0; i < pv.count; ++i) {
            if (pv.gauge_max[0][i] > r) {
                out[i] = 0.0;
                continue;
            }
            for (int c = 0; c < d; ++c) xi(c) = pv.hT(c, i);
            const double w = std::exp(-0.5 * F + pv.dot_acc[0][i]);
            out[i] = phi(xi) * w * (-0.5 * Fxy + pv.dot_acc[1][i] - gterm);
        }
    });

    // M2 pass on a disjoint stream.
    SweepSpec spec2;
    spec2.model = &model;
    spec2.grid = grid;
    spec2.opt = opt;
    spec2.opt.stream = opt.stream + 1;
    spec2.gauges.push_back(shift_gauge(kernel, domain, x));
    spec2.dots.push_back(u_dot(kernel, x));
    DotTrack vdot;
    vdot.coeff.resize(N);
    vdot.scale.assign(N, 1.0);
    for (int j = 1; j <= N; ++j) vdot.coeff[j - 1] = v.segment((j - 1) * d, d);
    spec2.dots.push_back(std::move(vdot));
    auto sr2 = run_sweep(spec2, 1, [&](const PathView& pv, double* out) {
        Vec xi(d);
        for (int i = 0; i < pv.count; ++i) {
            if (pv.gauge_max[0][i] > r) {
                out[i] = 0.0;
                continue;
            }
            for (int c = 0; c < d; ++c) xi(c) = pv.hT(c, i);
            const double w = std::exp(-0.5 * F + pv.dot_acc[0][i]);
            out[i] = phi(xi) * w * pv.dot_acc[1][i];
        }
    });

    GradResult gr;
    std::tie(gr.interior.mean, gr.interior.stderr_) =
        mean_se(sr1.sum[0], sr1.sumsq[0], sr1.m);
    gr.interior.m = opt.m;
    gr.interior.seed = opt.seed;
    std::tie(gr.boundary.mean, gr.boundary.stderr_) =
        mean_se(sr2.sum[0], sr2.sumsq[0], sr2.m);
    gr.boundary.m = opt.m;
    gr.boundary.seed = opt.seed;
    gr.total = gr.interior.mean + gr.boundary.mean;
    gr.total_stderr = std::hypot(gr.interior.stderr_, gr.boundary.stderr_);
    gr.config.boundary_sign = GradConfig::BoundarySign::plus;
    return gr;
}

namespace {

FdResult pack_fd(const SweepResult& sr, const McOptions& opt, double delta) {
    FdResult fr;
    fr.delta = delta;
    std::tie(fr.est.mean, fr.est.stderr_) = mean_se(sr.sum[0], sr.sumsq[0], sr.m);
    fr.est.m = opt.m;
    fr.est.seed = opt.seed;
    auto [h_mean, h_se] = mean_se(sr.sum[1], sr.sumsq[1], sr.m);
    fr.half_step = h_mean;
    fr.half_step_se = h_se;
    fr.bias_estimate = (4.0 / 3.0) * std::abs(fr.est.mean - fr.half_step);
    return fr;
}

}  // namespace

FdResult fd_oracle(const OUModel& model, const ConvexDomain& domain,
                   const TestFunction& phi, const Vec& x, const Vec& y,
                   const DyadicGrid& grid, const McOptions& opt, double delta) {
    if (delta <= 0.0) delta = 0.05 * std::sqrt(domain.r);
    const Vec xp = x + delta * y, xm = x - delta * y;
    const Vec xph = x + 0.5 * delta * y, xmh = x - 0.5 * delta * y;
    if (!domain.contains_closure(xp) || !domain.contains_closure(xm))
        throw Error(ErrorKind::domain, "fd_oracle: x +- delta y leaves the closed domain");
    const int d = model.dim;
    const int N = grid.steps();

    SweepSpec spec;
    spec.model = &model;
    spec.grid = grid;
    spec.opt = opt;
    const Vec* points[4] = {&xp, &xm, &xph, &xmh};
    for (const Vec* pt : points) {
        GaugeTrack g;
        g.domain = &domain;
        g.shift.resize(N + 1);
        for (int j = 0; j <= N; ++j) g.shift[j] = expm(model.A, grid.t(j)) * (*pt);
        spec.gauges.push_back(std::move(g));
    }
    const double r = domain.r;
    std::vector<Vec> shift_T;
    for (const Vec* pt : points) shift_T.push_back(expm(model.A, grid.T) * (*pt));

    auto sr = run_sweep(spec, 2, [&](const PathView& v, double* out) {
        Vec xi(d);
        double val[4];
        for (int i = 0; i < v.count; ++i) {
            for (int k = 0; k < 4; ++k) {
                if (v.gauge_max[k][i] <= r) {
                    for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i) + shift_T[k](c);
                    val[k] = phi(xi);
                } else {
                    val[k] = 0.0;
                }
            }
            out[i] = (val[0] - val[1]) / (2.0 * delta);
            out[v.count + i] = (val[2] - val[3]) / delta;
        }
    });
    return pack_fd(sr, opt, delta);
}

FdResult fd_stopped_cm(const ShiftKernel& kernel, const ConvexDomain& domain,
                       const TestFunction& phi, const Vec& x, const Vec& y,
                       const McOptions& opt, double delta) {
    if (delta <= 0.0) delta = 0.05 * std::sqrt(domain.r);
    const OUModel& model = kernel.model();
    const DyadicGrid& grid = kernel.grid();
    const int d = model.dim;
    const Vec xs[4] = {x + delta * y, x - delta * y, x + 0.5 * delta * y,
                       x - 0.5 * delta * y};
    for (const Vec& pt : xs)
        if (!domain.contains_closure(pt))
            throw Error(ErrorKind::domain,
                        "fd_stopped_cm: x +- delta y leaves the closed domain");
    double F[4];
    for (int k = 0; k < 4; ++k) F[k] = kernel.F(xs[k]);

    SweepSpec spec;
    spec.model = &model;
    spec.grid = grid;
    spec.opt = opt;
    for (const Vec& pt : xs) spec.gauges.push_back(shift_gauge(kernel, domain, pt));
    // G^n(x_k, h) = G^n(x,h) +- c G^n(y,h) by linearity: two dots cover all four.
    spec.dots.push_back(u_dot(kernel, x));
    spec.dots.push_back(u_dot(kernel, y));
    const double r = domain.r;
    const double coef[4] = {delta, -delta, 0.5 * delta, -0.5 * delta};

    auto sr = run_sweep(spec, 2, [&](const PathView& v, double* out) {
        Vec xi(d);
        double val[4];
        for (int i = 0; i < v.count; ++i) {
            const double Gx = v.dot_acc[0][i];
            const double Gy = v.dot_acc[1][i];
            double ph = 0.0;
            bool have_phi = false;
            for (int k = 0; k < 4; ++k) {
                if (v.gauge_max[k][i] <= r) {
                    if (!have_phi) {
                        for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i);
                        ph = phi(xi);
                        have_phi = true;
                    }
                    val[k] = ph * std::exp(-0.5 * F[k] + Gx + coef[k] * Gy);
                } else {
                    val[k] = 0.0;
                }
            }
            out[i] = (val[0] - val[1]) / (2.0 * delta);
            out[v.count + i] = (val[2] - val[3]) / delta;
        }
    });
    return pack_fd(sr, opt, delta);
}

}  // namespace oulab
