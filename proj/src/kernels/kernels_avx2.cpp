#include "oulab/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "kernels_scalar_impl.hpp"

// AVX2 variants: 4 paths per register, component-major blocks. Remainder
// lanes fall back to the shared reference sequence, which is fma-for-fma
// identical to the vector code.

namespace oulab::kern {

namespace {

constexpr int W = 4;

void ar1_step_avx2(int d, const double* E, const double* S, double* x,
                   const double* z, int count) {
    const int vec_end = count - count % W;
    __m256d tmp[8];
    for (int i = 0; i < vec_end; i += W) {
        for (int c = 0; c < d; ++c) {
            __m256d acc = _mm256_setzero_pd();
            for (int k = 0; k < d; ++k) {
                acc = _mm256_fmadd_pd(_mm256_set1_pd(E[c * d + k]),
                                      _mm256_loadu_pd(x + k * count + i), acc);
            }
            for (int k = 0; k < d; ++k) {
                acc = _mm256_fmadd_pd(_mm256_set1_pd(S[c * d + k]),
                                      _mm256_loadu_pd(z + k * count + i), acc);
            }
            tmp[c] = acc;
        }
        for (int c = 0; c < d; ++c) _mm256_storeu_pd(x + c * count + i, tmp[c]);
    }
    double stmp[8];
    for (int i = vec_end; i < count; ++i)
        ref::ar1_step_one(d, E, S, x, z, stmp, count, i);
}

void gauge_quad_avx2(int d, const double* M, const double* shift,
                     const double* dir, const double* x, std::int32_t j,
                     double* gmax, std::int32_t* jstar, double* cstar,
                     int count) {
    const int vec_end = count - count % W;
    __m256d kv[8];
    __m256d mkv[8];
    for (int i = 0; i < vec_end; i += W) {
        for (int c = 0; c < d; ++c)
            kv[c] = _mm256_add_pd(_mm256_loadu_pd(x + c * count + i),
                                  _mm256_set1_pd(shift[c]));
        for (int c = 0; c < d; ++c) {
            __m256d acc = _mm256_setzero_pd();
            for (int kk = 0; kk < d; ++kk)
                acc = _mm256_fmadd_pd(_mm256_set1_pd(M[c * d + kk]), kv[kk], acc);
            mkv[c] = acc;
        }
        __m256d val = _mm256_setzero_pd();
        for (int c = 0; c < d; ++c) val = _mm256_fmadd_pd(kv[c], mkv[c], val);
        __m256d cd = _mm256_setzero_pd();
        if (dir) {
            for (int c = 0; c < d; ++c)
                cd = _mm256_fmadd_pd(mkv[c], _mm256_set1_pd(dir[c]), cd);
            cd = _mm256_mul_pd(_mm256_set1_pd(2.0), cd);
        }
        const __m256d gm = _mm256_loadu_pd(gmax + i);
        const __m256d mask = _mm256_cmp_pd(val, gm, _CMP_GT_OQ);
        _mm256_storeu_pd(gmax + i, _mm256_blendv_pd(gm, val, mask));
        if (dir) {
            const __m256d cs = _mm256_loadu_pd(cstar + i);
            _mm256_storeu_pd(cstar + i, _mm256_blendv_pd(cs, cd, mask));
        }
        const int mm = _mm256_movemask_pd(mask);
        if (mm) {
            for (int lane = 0; lane < W; ++lane)
                if (mm & (1 << lane)) jstar[i + lane] = j;
        }
    }
    for (int i = vec_end; i < count; ++i)
        ref::gauge_quad_one(d, M, shift, dir, x, j, gmax, jstar, cstar, count, i);
}

void dot_accum_avx2(int d, const double* coeff, double scale, const double* x,
                    double* acc, int count) {
    const int vec_end = count - count % W;
    const __m256d vscale = _mm256_set1_pd(scale);
    for (int i = 0; i < vec_end; i += W) {
        __m256d inner = _mm256_setzero_pd();
        for (int c = 0; c < d; ++c)
            inner = _mm256_fmadd_pd(_mm256_set1_pd(coeff[c]),
                                    _mm256_loadu_pd(x + c * count + i), inner);
        const __m256d a = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(inner, vscale, a));
    }
    for (int i = vec_end; i < count; ++i)
        ref::dot_accum_one(d, coeff, scale, x, acc, count, i);
}

}  // namespace

const Ops* avx2_ops_impl() {
    static const Ops ops{"avx2", ar1_step_avx2, gauge_quad_avx2, dot_accum_avx2};
    return &ops;
}

}  // namespace oulab::kern

#endif  // x86_64
