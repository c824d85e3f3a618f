#include <doctest.h>

#include <cmath>

#include "oulab/estimators.hpp"
#include "oulab/mathutil.hpp"
#include "oulab/validate.hpp"
#include "test_helpers.hpp"

using namespace oulab;
using namespace oulab::testing;

namespace {

McOptions opts(std::int64_t m, std::uint64_t seed, std::uint32_t stream = 0) {
    McOptions o;
    o.m = m;
    o.seed = seed;
    o.stream = stream;
    return o;
}

double comb_se(const EstimatorResult& a, const EstimatorResult& b) {
    return std::hypot(a.stderr_, b.stderr_);
}

}  // namespace

TEST_CASE("unstopped_direct basics") {
    const OUModel m = ex1_model();
    Vec x(2);
    x << 0.4, -0.1;

    const EstimatorResult one =
        unstopped_direct(m, TestFunction::constant_one(2), x, 1.0, opts(1000, 1));
    CHECK(one.mean == 1.0);
    CHECK(one.stderr_ == 0.0);

    // Gaussian characteristic function: E cos(l . y) for y ~ N(mu, Q)
    Vec l(2);
    l << 0.7, -0.3;
    TestFunction cosfn = TestFunction::bounded_sin(l, M_PI / 2.0);  // sin(t + pi/2) = cos t
    const double t = 0.8;
    const Vec mu = expm(m.A, t) * x;
    const Mat Q = gram_Qt(m, t);
    const double want = std::cos(l.dot(mu)) * std::exp(-0.5 * l.dot(Q * l));
    const EstimatorResult est = unstopped_direct(m, cosfn, x, t, opts(100000, 2));
    CHECK(std::abs(est.mean - want) < 4.0 * est.stderr_);
}

TEST_CASE("unstopped_cm weight normalization and x=0 reduction") {
    const OUModel m = ex1_model();
    Vec x(2);
    x << 0.3, 0.2;
    const EstimatorResult w =
        unstopped_cm(m, TestFunction::constant_one(2), x, 1.0, opts(100000, 3));
    CHECK(std::abs(w.mean - 1.0) < 4.0 * w.stderr_);

    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    const EstimatorResult a = unstopped_cm(m, bump, Vec::Zero(2), 1.0, opts(20000, 4));
    const EstimatorResult b =
        unstopped_direct(m, bump, Vec::Zero(2), 1.0, opts(20000, 4));
    CHECK(a.mean == b.mean);  // weights are identically 1 at x = 0
}

TEST_CASE("unstopped estimators agree on random configs") {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> nd;
    int agreements = 0;
    for (int k = 0; k < 10; ++k) {
        const OUModel m = random_model(rng, 2);
        const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.5);
        const double t = 0.5 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
        Vec x(2);
        x << 0.5 * nd(rng), 0.5 * nd(rng);
        // keep the importance weights sane: the reweighting variance grows
        // like e^{|Lambda x|^2}, so the cross-check scales x into that regime
        const Mat lam = psd_pseudo_ops(gram_Qt(m, t)).pinv_sqrt * expm(m.A, t);
        const double lx = (lam * x).norm();
        if (lx > 1.5) x *= 1.5 / lx;
        const EstimatorResult da =
            unstopped_direct(m, bump, x, t, opts(40000, 100 + k, 0));
        const EstimatorResult cm = unstopped_cm(m, bump, x, t, opts(40000, 200 + k, 1));
        CHECK(std::abs(da.mean - cm.mean) < 4.0 * comb_se(da, cm));
        ++agreements;
    }
    CHECK(agreements == 10);
}

TEST_CASE("stopped_direct: huge domain reduces to unstopped") {
    const OUModel m = ex1_model();
    Vec x(2);
    x << 0.3, 0.2;
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    const ConvexDomain big = make_ball_domain(2, 400.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 5);
    const EstimatorResult stopped =
        stopped_direct(m, big, bump, x, grid, opts(60000, 11, 0));
    const EstimatorResult unstopped =
        unstopped_direct(m, bump, x, 1.0, opts(60000, 12, 1));
    CHECK(std::abs(stopped.mean - unstopped.mean) < 4.0 * comb_se(stopped, unstopped));
}

TEST_CASE("stopped_direct: monotone in r and domain error") {
    const OUModel m = ex1_model();
    const TestFunction one = TestFunction::constant_one(2);
    const DyadicGrid grid = DyadicGrid::make(1.0, 5);
    Vec x(2);
    x << 0.2, 0.1;
    const EstimatorResult small_r = stopped_direct(m, make_ball_domain(2, 0.5), one, x,
                                                   grid, opts(50000, 13, 0));
    const EstimatorResult large_r = stopped_direct(m, make_ball_domain(2, 1.0), one, x,
                                                   grid, opts(50000, 13, 1));
    CHECK(small_r.mean <= large_r.mean + 3.0 * comb_se(small_r, large_r));

    Vec outside(2);
    outside << 2.0, 0.0;
    CHECK_THROWS_AS(
        stopped_direct(m, make_ball_domain(2, 1.0), one, outside, grid, opts(100, 1)),
        Error);
}

TEST_CASE("stopped_direct matches the Brownian reflection oracle") {
    // d=1, A=0, C=1, g=x^2, r=1, T=1, phi=1, x=0; discrete exit overestimates
    // survival by a positive bias that shrinks with n.
    const OUModel bm = OUModel::make(Mat::Zero(1, 1), Mat::Identity(1, 1));
    const ConvexDomain ball = make_ball_domain(1, 1.0);
    const TestFunction one = TestFunction::constant_one(1);
    const double oracle = oracle::brownian_two_sided_survival(0.0, 1.0, 1.0);
    const EstimatorResult est =
        stopped_direct(bm, ball, one, Vec::Zero(1), DyadicGrid::make(1.0, 8),
                       opts(100000, 17));
    const double bias = est.mean - oracle;
    CHECK(bias > -3.0 * est.stderr_);
    CHECK(bias < 0.08);
}

TEST_CASE("stopped_cm: zero shift reduces exactly to stopped_direct") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 4);
    const ShiftKernel kernel(m, grid, 5);
    const EstimatorResult cm =
        stopped_cm(kernel, ball, bump, Vec::Zero(2), opts(20000, 19));
    const EstimatorResult direct =
        stopped_direct(m, ball, bump, Vec::Zero(2), grid, opts(20000, 19));
    CHECK(cm.mean == direct.mean);
    CHECK(cm.stderr_ == direct.stderr_);
}

TEST_CASE("strong Feller identity: cm vs direct, smooth and discontinuous phi") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 6);
    const ShiftKernel kernel(m, grid, 6);
    Vec x(2);
    x << 0.3, 0.2;

    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Vec nrm(2);
    nrm << 1.0, -0.5;
    const TestFunction half = TestFunction::halfspace(nrm, 0.1);

    for (const TestFunction& phi : {bump, half}) {
        const EstimatorResult cm = stopped_cm(kernel, ball, phi, x, opts(100000, 23, 0));
        const EstimatorResult direct =
            stopped_direct(m, ball, phi, x, grid, opts(100000, 29, 1));
        CHECK(std::abs(cm.mean - direct.mean) < 4.0 * comb_se(cm, direct));
    }
}

TEST_CASE("weight sanity: CM density integrates to one") {
    const OUModel m = ex1_model();
    const DyadicGrid grid = DyadicGrid::make(1.0, 6);
    const ShiftKernel kernel(m, grid, 6);
    // unrestricted set: a domain so large no path leaves it
    const ConvexDomain big = make_ball_domain(2, 1e6);
    Vec x(2);
    x << 0.3, 0.2;
    const EstimatorResult w =
        stopped_cm(kernel, big, TestFunction::constant_one(2), x, opts(100000, 31));
    CHECK(std::abs(w.mean - 1.0) < 4.0 * w.stderr_);
    CHECK(w.clamped_weights == 0);
}

TEST_CASE("stopped_cm continuity in x at fixed seed") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 5);
    const ShiftKernel kernel(m, grid, 5);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Vec x0(2);
    x0 << 0.2, 0.1;
    const EstimatorResult base = stopped_cm(kernel, ball, bump, x0, opts(20000, 37));
    double prev = HUGE_VAL;
    for (double h : {0.2, 0.05, 0.0125}) {
        Vec x = x0;
        x(0) += h;
        const EstimatorResult e = stopped_cm(kernel, ball, bump, x, opts(20000, 37));
        const double gap = std::abs(e.mean - base.mean);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 0.02);
}

TEST_CASE("stderr scales like 1/sqrt(m)") {
    const OUModel m = ex1_model();
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Vec x(2);
    x << 0.1, 0.0;
    const EstimatorResult a = unstopped_direct(m, bump, x, 1.0, opts(20000, 41));
    const EstimatorResult b = unstopped_direct(m, bump, x, 1.0, opts(80000, 41));
    const double ratio = a.stderr_ / b.stderr_;  // ideal 2.0
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
}

TEST_CASE("determinism across thread counts") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 5);
    const ShiftKernel kernel(m, grid, 5);
    const TestFunction bump = TestFunction::gauss_bump(Vec::Zero(2), 1.0);
    Vec x(2);
    x << 0.3, 0.2;
    McOptions o1 = opts(30000, 43);
    o1.threads = 1;
    McOptions o4 = opts(30000, 43);
    o4.threads = 4;
    const EstimatorResult r1 = stopped_cm(kernel, ball, bump, x, o1);
    const EstimatorResult r4 = stopped_cm(kernel, ball, bump, x, o4);
    CHECK(r1.mean == r4.mean);
    CHECK(r1.stderr_ == r4.stderr_);
}

TEST_CASE("lambda_cdf basic shape") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 5);
    const ShiftKernel kernel(m, grid, 5);
    Vec x(2);
    x << 0.3, 0.2;
    std::vector<double> svals;
    for (int i = 0; i <= 20; ++i) svals.push_back(0.05 + 0.35 * i);
    svals.push_back(1e6);  // s -> infinity
    const auto pts = lambda_cdf(kernel, ball, x, opts(40000, 47), svals);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].value >= pts[i - 1].value);
    CHECK(pts.back().value == 1.0);
    CHECK(pts.front().value < 0.05);
    // Gamma >= g(x) always (the j=0 term), so mass below g(x) is exactly zero
    const auto below = lambda_cdf(kernel, ball, x, opts(4000, 47), {0.1});
    CHECK(below[0].value == 0.0);
}

TEST_CASE("lambda_cdf decreasing in n within noise") {
    const OUModel m = ex1_model();
    const ConvexDomain ball = make_ball_domain(2, 1.0);
    Vec x(2);
    x << 0.3, 0.2;
    const std::vector<double> svals = {0.5, 0.8, 1.2};
    const ShiftKernel k5(m, DyadicGrid::make(1.0, 5), 7);
    const ShiftKernel k6(m, DyadicGrid::make(1.0, 6), 7);
    const auto a = lambda_cdf(k5, ball, x, opts(60000, 53, 0), svals);
    const auto b = lambda_cdf(k6, ball, x, opts(60000, 59, 1), svals);
    for (std::size_t i = 0; i < svals.size(); ++i) {
        const double se = std::hypot(a[i].stderr_, b[i].stderr_);
        CHECK(b[i].value <= a[i].value + 4.0 * se);
    }
}

TEST_CASE("lambda_density: Brownian oracle and guards") {
    const OUModel bm = OUModel::make(Mat::Zero(1, 1), Mat::Identity(1, 1));
    const ConvexDomain ball = make_ball_domain(1, 1.0);
    const DyadicGrid grid = DyadicGrid::make(1.0, 8);
    const ShiftKernel kernel(bm, grid, 8);
    const Vec x0 = Vec::Zero(1);

    // Lambda(s) = P(sup |W| <= sqrt(s)) for the gauge x^2
    const double r = 1.0, eps = 0.02;
    const EstimatorResult dens =
        lambda_density(kernel, ball, x0, opts(200000, 61), r, eps);
    const double fd_oracle_dens =
        (oracle::brownian_two_sided_survival(0.0, std::sqrt(r + eps), 1.0) -
         oracle::brownian_two_sided_survival(0.0, std::sqrt(r - eps), 1.0)) /
        (2.0 * eps);
    // discrete exit shifts the CDF; allow 3 se plus discretization slack
    CHECK(std::abs(dens.mean - fd_oracle_dens) < 3.0 * dens.stderr_ + 0.05);

    // zero-mass region reports 0; a starving shell inside the support is a
    // bandwidth error
    const EstimatorResult zero =
        lambda_density(kernel, ball, x0, opts(20000, 61), 25.0, 0.5);
    CHECK(zero.mean == 0.0);
    CHECK_THROWS_AS(lambda_density(kernel, ball, x0, opts(2000, 61), r, 0.02), Error);
}

TEST_CASE("ehrhard_check on synthetic input") {
    // exactly concave: S(s) = sqrt(s) mapped back through Phi
    std::vector<LambdaPoint> pts;
    for (int i = 1; i <= 20; ++i) {
        const double s = 0.2 * i;
        pts.push_back({s, norm_cdf(std::sqrt(s)), 1e-4});
    }
    const EhrhardReport rep = ehrhard_check(pts);
    CHECK(rep.monotone);
    CHECK(rep.max_concavity_violation_in_se <= 0.0);
    CHECK(rep.usable_points == 20);

    // a convex kink must show as a large positive violation
    std::vector<LambdaPoint> bad = pts;
    bad[10].value = norm_cdf(std::sqrt(bad[10].s) - 0.2);
    CHECK(ehrhard_check(bad).max_concavity_violation_in_se > 3.0);

    // endpoint values 0/1 are excluded
    std::vector<LambdaPoint> with_ends = pts;
    with_ends.insert(with_ends.begin(), {0.0, 0.0, 0.0});
    with_ends.push_back({1e9, 1.0, 0.0});
    CHECK(ehrhard_check(with_ends).excluded_points == 2);
}
