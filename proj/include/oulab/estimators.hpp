#pragma once

#include <cstdint>
#include <vector>

#include "oulab/domain.hpp"
#include "oulab/shift.hpp"
#include "oulab/testfunctions.hpp"

namespace oulab {

// The universal Monte Carlo return contract.
struct EstimatorResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t m = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    double wall_ms = 0.0;
    // diagnostics
    std::int64_t clamped_weights = 0;
};

struct McOptions {
    std::int64_t m = 100000;
    std::uint64_t seed = 1;
    std::uint32_t stream = 0;
    int threads = 1;
};

// R_t phi(x) = E phi(y), y ~ N(e^{tA} x, Q_t).
EstimatorResult unstopped_direct(const OUModel& model, const TestFunction& phi,
                                 const Vec& x, double t, const McOptions& opt);

// Same object through the Cameron-Martin density: y ~ N(0, Q_t) reweighted by
// exp(-|L x|^2/2 + <L x, Q_t^{-1/2} y>) with L = Q_t^{-1/2} e^{tA}.
EstimatorResult unstopped_cm(const OUModel& model, const TestFunction& phi,
                             const Vec& x, double t, const McOptions& opt);

// Discrete stopped semigroup, direct form: E[phi(X(T)) 1{g(X(t_j)) <= r,
// j = 0..2^n}] with X(t_j) = e^{t_j A} x + W_A(t_j).
EstimatorResult stopped_direct(const OUModel& model, const ConvexDomain& domain,
                               const TestFunction& phi, const Vec& x,
                               const DyadicGrid& grid, const McOptions& opt);

// Reweighted form: h ~ N_{Q_{T,n}},
//   E[phi(h(T)) 1{Gamma_n(h + d(x,.)) <= r} exp(-F(x)/2 + G^n(x,h))].
// phi takes h(T) alone (the shift vanishes at T).
EstimatorResult stopped_cm(const ShiftKernel& kernel, const ConvexDomain& domain,
                           const TestFunction& phi, const Vec& x,
                           const McOptions& opt);

struct LambdaPoint {
    double s = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

// Empirical CDF of Gamma_n(h + d(x,.)) at each s.
std::vector<LambdaPoint> lambda_cdf(const ShiftKernel& kernel,
                                    const ConvexDomain& domain, const Vec& x,
                                    const McOptions& opt,
                                    const std::vector<double>& s_values);

// Symmetric finite difference (Lambda(r+eps) - Lambda(r-eps)) / (2 eps) with
// binomial-propagated stderr. Throws ErrorKind::bandwidth when fewer than 100
// samples land in the shell.
EstimatorResult lambda_density(const ShiftKernel& kernel,
                               const ConvexDomain& domain, const Vec& x,
                               const McOptions& opt, double r, double eps);

struct EhrhardReport {
    double max_concavity_violation_in_se = 0.0;
    bool monotone = true;
    int excluded_points = 0;   // Lambda at 0 or 1
    int usable_points = 0;
};

// Maps the CDF points through the standard normal quantile and reports the
// worst positive (convexity-violating) second divided difference in units of
// propagated SE. Points with Lambda in {0,1} are excluded and counted.
EhrhardReport ehrhard_check(const std::vector<LambdaPoint>& lambda_points);

}  // namespace oulab
