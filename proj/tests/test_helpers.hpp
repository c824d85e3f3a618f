#pragma once

#include <doctest.h>

#include <random>

#include "oulab/matrixcalc.hpp"

namespace oulab::testing {

inline OUModel ex1_model() {
    Mat A(2, 2), C(2, 2);
    A << 0, 0, 1, 0;
    C << 1, 0, 0, 0;
    return OUModel::make(A, C);
}

inline Mat ex1_Qt(double t) {
    Mat Q(2, 2);
    Q << t, t * t / 2.0, t * t / 2.0, t * t * t / 3.0;
    return Q;
}

inline Mat ex1_U(double T) {
    Mat U(2, 2);
    U << 6 * T * T, 4 * T * T * T, 4 * T * T * T, 3 * T * T * T * T;
    return U / 12.0;
}

inline Mat ex1_Uinv(double T) {
    Mat U(2, 2);
    U << 3.0, -4.0 / T, -4.0 / T, 6.0 / (T * T);
    return (6.0 / (T * T)) * U;
}

// u(x,s) = (6/T^4) [[T^2 - 2Ts, 2(T - 3s)], [2T, 6]] x
inline Mat ex1_u_matrix(double T, double s) {
    Mat M(2, 2);
    M << T * T - 2 * T * s, 2 * (T - 3 * s), 2 * T, 6;
    return (6.0 / (T * T * T * T)) * M;
}

// Random model generator: controllable by construction unless degenerate is
// requested (diffusion confined to an A-invariant coordinate subspace).
inline OUModel random_model(std::mt19937_64& rng, int d, bool degenerate = false) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = 0.6 * nd(rng);
    Mat C;
    if (degenerate) {
        A.setZero();
        for (int i = 0; i < d; ++i) A(i, i) = 0.5 * nd(rng);
        C = Mat::Zero(d, d);
        if (d > 1 && std::uniform_real_distribution<double>(0, 1)(rng) < 0.5)
            C(0, 0) = 1.0;  // rank 1 on a diagonal (invariant) direction
    } else {
        Mat B(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) B(i, j) = nd(rng);
        C = B * B.transpose() / d;
    }
    return OUModel::make(A, C);
}

inline double rel_err(const Mat& got, const Mat& want) {
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(const Vec& got, const Vec& want) {
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oulab::testing
