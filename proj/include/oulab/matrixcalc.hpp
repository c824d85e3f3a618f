#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "oulab/errors.hpp"

namespace oulab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Linear model dX = AX dt + sqrt(C) dW with C symmetric PSD. sqrtC is cached
// at construction (spectral square root).
struct OUModel {
    int dim = 0;
    Mat A;
    Mat C;
    Mat sqrtC;

    // Validates symmetry/PSD-ness of C (1e-12 relative) and caches sqrtC.
    static OUModel make(const Mat& A, const Mat& C);
};

struct HypothesisReport {
    bool kalman_rank_ok = false;
    double min_det_Qt = 0.0;
    std::vector<double> probed_times;
    std::vector<double> probed_dets;
    bool consistent = false;
};

// Matrix exponential e^{tA}, scaling-and-squaring with Pade degree chosen by
// norm bounds (Higham 2005 style).
Mat expm(const Mat& A, double t);

// Q_t = int_0^t e^{sA} C e^{sA'} ds via the block matrix exponential of
// [[-A, C], [0, A']]; exact up to expm accuracy, no step-size tuning.
Mat gram_Qt(const OUModel& model, double t);

// Cross-check path for gram_Qt: adaptive Gauss-Legendre quadrature of the
// integrand. Kept as an independent route; tests assert both agree.
Mat gram_Qt_quadrature(const OUModel& model, double t, double rel_tol = 1e-12);

// U = int_0^T r e^{rA} C e^{rA'} dr via a 3x3-block Van Loan exponential.
// Throws ErrorKind::model if det U is numerically zero.
Mat gram_U(const OUModel& model, double T);
Mat gram_U_quadrature(const OUModel& model, double T, double rel_tol = 1e-12);

// Covariance kernel of the stochastic convolution:
//   K(t,s) = e^{(t-s)A} Q_s   for s <= t,   K(t,s) = K(s,t)'  otherwise.
Mat kernel_K(const OUModel& model, double t, double s);

// rank [sqrtC, A sqrtC, ..., A^{d-1} sqrtC] == d at relative singular value
// cutoff 1e-10. Algebraic equivalent of the nonsingularity of Q_t for t > 0.
bool kalman_rank(const OUModel& model, double rel_cutoff = 1e-10);

// Probes det Q_t at the given times and cross-checks against the rank
// condition. Throws ErrorKind::internal if the two checks disagree.
HypothesisReport check_hypothesis1(const OUModel& model,
                                   const std::vector<double>& times);

struct PsdOps {
    Mat sqrt;
    Mat pinv;
    Mat pinv_sqrt;
    int rank = 0;
};

// Eigendecomposition-based square root / pseudo-inverse with eigenvalues
// below rel_cutoff * lambda_max treated as zero.
PsdOps psd_pseudo_ops(const Mat& M, double rel_cutoff = 1e-10);

// Model file IO: plain-text key-value with d, row-major A, row-major C.
OUModel load_model_file(const std::string& path);
void save_model_file(const OUModel& model, const std::string& path);

// Operator 2-norm (largest singular value).
double op_norm(const Mat& M);

}  // namespace oulab
