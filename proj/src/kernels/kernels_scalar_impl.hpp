#pragma once

#include <cmath>
#include <cstdint>

// Reference per-path operations. The SIMD variants replicate this exact
// sequence of fused and unfused operations lane-by-lane; any change here must
// be mirrored there (the equivalence tests compare bit for bit).

namespace oulab::kern::ref {

inline void ar1_step_one(int d, const double* E, const double* S, double* x,
                         const double* z, double* tmp, int stride, int i) {
    for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc = std::fma(E[c * d + k], x[k * stride + i], acc);
        for (int k = 0; k < d; ++k) acc = std::fma(S[c * d + k], z[k * stride + i], acc);
        tmp[c] = acc;
    }
    for (int c = 0; c < d; ++c) x[c * stride + i] = tmp[c];
}

inline void gauge_quad_one(int d, const double* M, const double* shift,
                           const double* dir, const double* x, std::int32_t j,
                           double* gmax, std::int32_t* jstar, double* cstar,
                           int stride, int i) {
    double k[8];
    double mk[8];
    for (int c = 0; c < d; ++c) k[c] = x[c * stride + i] + shift[c];
    for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int kk = 0; kk < d; ++kk) acc = std::fma(M[c * d + kk], k[kk], acc);
        mk[c] = acc;
    }
    double val = 0.0;
    for (int c = 0; c < d; ++c) val = std::fma(k[c], mk[c], val);
    double cd = 0.0;
    if (dir) {
        for (int c = 0; c < d; ++c) cd = std::fma(mk[c], dir[c], cd);
        cd = 2.0 * cd;
    }
    if (val > gmax[i]) {
        gmax[i] = val;
        jstar[i] = j;
        if (dir) cstar[i] = cd;
    }
}

inline void dot_accum_one(int d, const double* coeff, double scale,
                          const double* x, double* acc, int stride, int i) {
    double inner = 0.0;
    for (int c = 0; c < d; ++c) inner = std::fma(coeff[c], x[c * stride + i], inner);
    acc[i] = std::fma(inner, scale, acc[i]);
}

}  // namespace oulab::kern::ref
