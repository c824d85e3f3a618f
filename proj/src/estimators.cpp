#include "oulab/estimators.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "oulab/mathutil.hpp"
#include "oulab/rng.hpp"
#include "oulab/sweep.hpp"

namespace oulab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void hash_doubles(std::ostringstream& os, const double* p, std::int64_t n) {
    char buf[32];
    for (std::int64_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,", p[i]);
        os << buf;
    }
}

std::uint64_t call_hash(const char* op, const OUModel& model, const Vec& x,
                        double T, int level, const McOptions& opt,
                        double extra = 0.0) {
    std::ostringstream os;
    os << op << "|d=" << model.dim << "|";
    hash_doubles(os, model.A.data(), model.A.size());
    hash_doubles(os, model.C.data(), model.C.size());
    hash_doubles(os, x.data(), x.size());
    os << "|T=" << T << "|n=" << level << "|m=" << opt.m << "|seed=" << opt.seed
       << "|stream=" << opt.stream << "|extra=" << extra;
    return fnv1a_str(os.str());
}

// Simple per-path Monte Carlo (no grid sweep) with the same fixed-block
// deterministic reduction as run_sweep.
SweepResult simple_mc(const McOptions& opt, int n_out,
                      const std::function<void(NormalStream&, double*)>& per_path) {
    const std::uint64_t key = philox_key(opt.seed, opt.stream);
    const std::int64_t blocks = (opt.m + sweep_block_size() - 1) / sweep_block_size();
    std::vector<double> bsum(static_cast<std::size_t>(blocks) * n_out);
    std::vector<double> bsumsq(static_cast<std::size_t>(blocks) * n_out);
    block_parallel(opt.m, opt.threads, [&](std::int64_t p0, int count, std::int64_t b) {
        std::vector<double> out(static_cast<std::size_t>(n_out) * count);
        std::vector<double> vals(n_out);
        NormalStream ns;
        for (int i = 0; i < count; ++i) {
            ns.reset(key, static_cast<std::uint64_t>(p0 + i));
            per_path(ns, vals.data());
            for (int k = 0; k < n_out; ++k) out[k * count + i] = vals[k];
        }
        std::vector<double> sq(count);
        for (int k = 0; k < n_out; ++k) {
            const double* row = out.data() + static_cast<std::size_t>(k) * count;
            bsum[b * n_out + k] = pairwise_sum(std::span<const double>(row, count));
            for (int i = 0; i < count; ++i) sq[i] = row[i] * row[i];
            bsumsq[b * n_out + k] = pairwise_sum(std::span<const double>(sq.data(), count));
        }
    });
    SweepResult res;
    res.m = opt.m;
    res.sum.assign(n_out, 0.0);
    res.sumsq.assign(n_out, 0.0);
    for (std::int64_t b = 0; b < blocks; ++b)
        for (int k = 0; k < n_out; ++k) {
            res.sum[k] += bsum[b * n_out + k];
            res.sumsq[k] += bsumsq[b * n_out + k];
        }
    return res;
}

EstimatorResult pack_result(const SweepResult& sr, int k, const McOptions& opt,
                            std::uint64_t hash, Clock::time_point t0) {
    EstimatorResult r;
    std::tie(r.mean, r.stderr_) = mean_se(sr.sum[k], sr.sumsq[k], sr.m);
    r.m = sr.m;
    r.seed = opt.seed;
    r.config_hash = hash;
    r.wall_ms = elapsed_ms(t0);
    return r;
}

}  // namespace

EstimatorResult unstopped_direct(const OUModel& model, const TestFunction& phi,
                                 const Vec& x, double t, const McOptions& opt) {
    const auto t0 = Clock::now();
    const int d = model.dim;
    const Vec mean_vec = expm(model.A, t) * x;
    const Mat S = psd_pseudo_ops(gram_Qt(model, t)).sqrt;
    auto sr = simple_mc(opt, 1, [&](NormalStream& ns, double* out) {
        Vec z(d);
        for (int c = 0; c < d; ++c) z(c) = ns.next();
        out[0] = phi(mean_vec + S * z);
    });
    return pack_result(sr, 0, opt,
                       call_hash("unstopped_direct", model, x, t, 0, opt), t0);
}

EstimatorResult unstopped_cm(const OUModel& model, const TestFunction& phi,
                             const Vec& x, double t, const McOptions& opt) {
    const auto t0 = Clock::now();
    const int d = model.dim;
    const PsdOps q = psd_pseudo_ops(gram_Qt(model, t));
    if (q.rank < d)
        throw Error(ErrorKind::conditioning,
                    "unstopped_cm: Q_t numerically singular; reweighting needs Hypothesis 1");
    const Vec lx = q.pinv_sqrt * (expm(model.A, t) * x);
    const double lx2 = 0.5 * lx.squaredNorm();
    auto sr = simple_mc(opt, 1, [&](NormalStream& ns, double* out) {
        Vec z(d);
        for (int c = 0; c < d; ++c) z(c) = ns.next();
        // y = Q^{1/2} z, so Q^{-1/2} y = z in the same eigenbasis.
        const double w = std::exp(-lx2 + lx.dot(z));
        out[0] = phi(q.sqrt * z) * w;
    });
    return pack_result(sr, 0, opt, call_hash("unstopped_cm", model, x, t, 0, opt),
                       t0);
}

EstimatorResult stopped_direct(const OUModel& model, const ConvexDomain& domain,
                               const TestFunction& phi, const Vec& x,
                               const DyadicGrid& grid, const McOptions& opt) {
    const auto t0 = Clock::now();
    if (!domain.contains_closure(x))
        throw Error(ErrorKind::domain, "stopped_direct: x outside the closed domain");
    const int d = model.dim;
    const int N = grid.steps();

    SweepSpec spec;
    spec.model = &model;
    spec.grid = grid;
    spec.opt = opt;
    GaugeTrack g;
    g.domain = &domain;
    g.shift.resize(N + 1);
    for (int j = 0; j <= N; ++j) g.shift[j] = expm(model.A, grid.t(j)) * x;
    spec.gauges.push_back(std::move(g));
    const Vec shift_T = spec.gauges[0].shift[N];
    const double r = domain.r;

    auto sr = run_sweep(spec, 1, [&](const PathView& v, double* out) {
        Vec xi(d);
        for (int i = 0; i < v.count; ++i) {
            if (v.gauge_max[0][i] <= r) {
                for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i) + shift_T(c);
                out[i] = phi(xi);
            } else {
                out[i] = 0.0;
            }
        }
    });
    return pack_result(
        sr, 0, opt, call_hash("stopped_direct", model, x, grid.T, grid.level, opt),
        t0);
}

EstimatorResult stopped_cm(const ShiftKernel& kernel, const ConvexDomain& domain,
                           const TestFunction& phi, const Vec& x,
                           const McOptions& opt) {
    const auto t0 = Clock::now();
    if (!domain.contains_closure(x))
        throw Error(ErrorKind::domain, "stopped_cm: x outside the closed domain");
    const OUModel& model = kernel.model();
    const DyadicGrid& grid = kernel.grid();
    const int d = model.dim;
    const int N = grid.steps();
    const double dt = grid.dt();
    const double F = kernel.F(x);

    SweepSpec spec;
    spec.model = &model;
    spec.grid = grid;
    spec.opt = opt;
    GaugeTrack g;
    g.domain = &domain;
    g.shift.resize(N + 1);
    for (int j = 0; j <= N; ++j) g.shift[j] = kernel.d(x, j);
    spec.gauges.push_back(std::move(g));
    DotTrack gdot;
    gdot.coeff.resize(N);
    gdot.scale.assign(N, dt);
    for (int j = 1; j <= N; ++j) gdot.coeff[j - 1] = kernel.u(x, j);
    spec.dots.push_back(std::move(gdot));
    const double r = domain.r;

    auto sr = run_sweep(spec, 2, [&](const PathView& v, double* out) {
        Vec xi(d);
        for (int i = 0; i < v.count; ++i) {
            double* val = out + i;
            double* clamped = out + v.count + i;
            *clamped = 0.0;
            if (v.gauge_max[0][i] > r) {
                *val = 0.0;
                continue;
            }
            double lw = -0.5 * F + v.dot_acc[0][i];
            if (std::abs(lw) > 700.0) {
                lw = lw > 0.0 ? 700.0 : -700.0;
                *clamped = 1.0;
            }
            for (int c = 0; c < d; ++c) xi(c) = v.hT(c, i);
            *val = phi(xi) * std::exp(lw);
        }
    });
    EstimatorResult r2 = pack_result(
        sr, 0, opt, call_hash("stopped_cm", model, x, grid.T, grid.level, opt), t0);
    r2.clamped_weights = std::llround(sr.sum[1]);
    return r2;
}

namespace {

// One sweep collecting Gamma_n(h + d(x,.)) for every path.
std::vector<double> gamma_samples(const ShiftKernel& kernel,
                                  const ConvexDomain& domain, const Vec& x,
                                  const McOptions& opt) {
    const OUModel& model = kernel.model();
    const DyadicGrid& grid = kernel.grid();
    const int N = grid.steps();
    SweepSpec spec;
    spec.model = &model;
    spec.grid = grid;
    spec.opt = opt;
    GaugeTrack g;
    g.domain = &domain;
    g.shift.resize(N + 1);
    for (int j = 0; j <= N; ++j) g.shift[j] = kernel.d(x, j);
    spec.gauges.push_back(std::move(g));

    std::vector<double> gammas(static_cast<std::size_t>(opt.m));
    run_sweep(spec, 0, nullptr, [&](const PathView& v) {
        for (int i = 0; i < v.count; ++i) gammas[v.p0 + i] = v.gauge_max[0][i];
    });
    return gammas;
}

}  // namespace

std::vector<LambdaPoint> lambda_cdf(const ShiftKernel& kernel,
                                    const ConvexDomain& domain, const Vec& x,
                                    const McOptions& opt,
                                    const std::vector<double>& s_values) {
    const std::vector<double> gammas = gamma_samples(kernel, domain, x, opt);
    const double m = static_cast<double>(opt.m);
    std::vector<LambdaPoint> out;
    out.reserve(s_values.size());
    for (double s : s_values) {
        std::int64_t cnt = 0;
        for (double gv : gammas) cnt += (gv <= s);
        const double p = cnt / m;
        out.push_back({s, p, std::sqrt(std::max(p * (1.0 - p), 0.0) / m)});
    }
    return out;
}

EstimatorResult lambda_density(const ShiftKernel& kernel,
                               const ConvexDomain& domain, const Vec& x,
                               const McOptions& opt, double r, double eps) {
    const auto t0 = Clock::now();
    if (!(eps > 0.0)) throw Error(ErrorKind::invalid_input, "lambda_density: eps <= 0");
    const std::vector<double> gammas = gamma_samples(kernel, domain, x, opt);
    std::int64_t shell = 0;
    for (double gv : gammas) shell += (gv > r - eps && gv <= r + eps);
    const double m = static_cast<double>(opt.m);
    EstimatorResult res;
    if (shell == 0) {
        // no mass in the shell at all: the density estimate is genuinely 0;
        // rule-of-three bound for the unseen shell proportion
        res.mean = 0.0;
        res.stderr_ = (3.0 / m) / (2.0 * eps);
    } else if (shell < 100) {
        const double suggested = eps * std::max(2.0, 200.0 / static_cast<double>(shell));
        throw Error(ErrorKind::bandwidth,
                    "lambda_density: only " + std::to_string(shell) +
                        " samples in the shell; increase eps to about " +
                        std::to_string(suggested));
    } else {
        const double p = shell / m;
        res.mean = p / (2.0 * eps);
        res.stderr_ = std::sqrt(std::max(p * (1.0 - p), 0.0) / m) / (2.0 * eps);
    }
    res.m = opt.m;
    res.seed = opt.seed;
    res.config_hash = call_hash("lambda_density", kernel.model(), x,
                                kernel.grid().T, kernel.grid().level, opt, r + eps);
    res.wall_ms = elapsed_ms(t0);
    return res;
}

EhrhardReport ehrhard_check(const std::vector<LambdaPoint>& lambda_points) {
    EhrhardReport rep;
    std::vector<double> s, S, se;
    for (const LambdaPoint& p : lambda_points) {
        if (p.value <= 0.0 || p.value >= 1.0) {
            ++rep.excluded_points;
            continue;
        }
        const double Sx = norm_quantile(p.value);
        s.push_back(p.s);
        S.push_back(Sx);
        // dPhi^{-1}/dp = sqrt(2 pi) e^{S^2/2}
        se.push_back(p.stderr_ * std::sqrt(2.0 * M_PI) * std::exp(0.5 * Sx * Sx));
    }
    rep.usable_points = static_cast<int>(s.size());
    for (std::size_t i = 0; i + 1 < S.size(); ++i)
        if (S[i + 1] < S[i]) rep.monotone = false;
    double worst = -HUGE_VAL;
    for (std::size_t i = 0; i + 2 < S.size(); ++i) {
        const double h1 = s[i + 1] - s[i];
        const double h2 = s[i + 2] - s[i + 1];
        const double viol = (S[i + 2] - S[i + 1]) / h2 - (S[i + 1] - S[i]) / h1;
        // stderr of the slope difference, treating the three CDF values as
        // independent (conservative for the positively correlated ECDF).
        const double vse = std::sqrt(se[i + 2] * se[i + 2] / (h2 * h2) +
                                     se[i + 1] * se[i + 1] * (1.0 / h1 + 1.0 / h2) *
                                         (1.0 / h1 + 1.0 / h2) +
                                     se[i] * se[i] / (h1 * h1));
        if (vse > 0.0) worst = std::max(worst, viol / vse);
    }
    rep.max_concavity_violation_in_se = (worst == -HUGE_VAL) ? 0.0 : worst;
    return rep;
}

}  // namespace oulab
