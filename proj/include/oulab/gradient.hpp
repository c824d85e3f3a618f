#pragma once

#include "oulab/estimators.hpp"

namespace oulab {

// Runtime-switchable choices for the boundary term. The finite-n integration
// by parts carries the Cameron-Martin weight inside the shell integral, and
// the mollifier derivative contributes the shell term with a minus sign;
// (cm_weighted, minus) is also the unique variant that matches the finite
// difference oracle on both canonical configurations, so it is the default.
// All four combinations stay selectable and the validation suite emits the
// full adjudication table.
struct GradConfig {
    enum class BoundaryMethod { shell, conditional_times_density };
    enum class WeightVariant { cm_weighted, unweighted };
    enum class BoundarySign { plus, minus };

    BoundaryMethod boundary_method = BoundaryMethod::shell;
    double shell_eps = 0.0;  // 0 => r / 40
    WeightVariant weight_variant = WeightVariant::cm_weighted;
    BoundarySign boundary_sign = BoundarySign::minus;
    double fd_step = 0.0;    // 0 => 0.05 sqrt(r)
};

struct BoundaryResult {
    EstimatorResult est;
    std::int64_t shell_count = 0;
    bool empty_shell = false;  // returned as 0 with this warning flag set
};

struct GradResult {
    EstimatorResult interior;
    EstimatorResult boundary;
    double total = 0.0;
    double total_stderr = 0.0;
    std::int64_t shell_count = 0;
    GradConfig config;
};

// Interior term of the gradient representation:
//   E[ 1{Gamma_n <= r} phi(h(T)) e^{-F/2 + G^n} (-F_x(x)y/2 + G^n(y,h)) ].
EstimatorResult interior_term(const ShiftKernel& kernel,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt);

// Shell estimator of the boundary term:
//   (1/2eps) E[ 1{r-eps <= Gamma_n <= r+eps} phi(h(T)) [weight]
//               Gamma'_n(h + d(x,.)) . d(y,.) ].
// An empty shell is returned as 0 with the warning flag set.
BoundaryResult boundary_shell(const ShiftKernel& kernel,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt, double eps,
                              GradConfig::WeightVariant variant);

// Conditional-expectation form: shell average of the same integrand times the
// CDF derivative estimate at r. Algebraically a reweighting of the shell
// estimator; stderr comes from the delta method on the product.
BoundaryResult boundary_conditional(const ShiftKernel& kernel,
                                    const ConvexDomain& domain,
                                    const TestFunction& phi, const Vec& x,
                                    const Vec& y, const McOptions& opt,
                                    double eps,
                                    GradConfig::WeightVariant variant);

// Main representation formula: interior + signed boundary per config.
// Interior and boundary use disjoint RNG streams (opt.stream, opt.stream+1).
GradResult grad_main(const ShiftKernel& kernel, const ConvexDomain& domain,
                     const TestFunction& phi, const Vec& x, const Vec& y,
                     const McOptions& opt, const GradConfig& cfg);

// Exact gradient of the discrete semigroup at finite n: M1 (with the
// -G^n_h . d(y,.) term) plus M2 through the explicit grid-covariance inverse.
// Requires the grid Gaussian of the same (model, grid); n is capped at 8 for
// conditioning. M1 and M2 use disjoint streams so their errors combine in
// quadrature.
GradResult grad_discrete_full(const ShiftKernel& kernel,
                              const GridGaussian& gg,
                              const ConvexDomain& domain,
                              const TestFunction& phi, const Vec& x,
                              const Vec& y, const McOptions& opt);

struct FdResult {
    EstimatorResult est;      // central difference at step delta
    double delta = 0.0;
    double half_step = 0.0;   // estimate at delta/2, same draws
    double half_step_se = 0.0;
    double bias_estimate = 0.0;  // (4/3) |fd(delta) - fd(delta/2)|, the O(delta^2) term
};

// Common-random-numbers central difference of stopped_direct:
//   (R phi(x + delta y) - R phi(x - delta y)) / (2 delta)
// with identical W_A draws; stderr from pathwise differences. Also evaluated
// at delta/2 on the same draws for the two-step bias report.
FdResult fd_oracle(const OUModel& model, const ConvexDomain& domain,
                   const TestFunction& phi, const Vec& x, const Vec& y,
                   const DyadicGrid& grid, const McOptions& opt, double delta);

// Same-draw central difference of the reweighted (CM) semigroup at fixed n;
// the sharpest cross-check for grad_discrete_full since both sides target the
// same finite-dimensional object.
FdResult fd_stopped_cm(const ShiftKernel& kernel, const ConvexDomain& domain,
                       const TestFunction& phi, const Vec& x, const Vec& y,
                       const McOptions& opt, double delta);

}  // namespace oulab
