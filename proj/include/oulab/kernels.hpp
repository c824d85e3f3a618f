#pragma once

#include <cstdint>

namespace oulab::kern {

// Data-parallel inner loops of the Monte Carlo sweeps, vectorized across
// paths. Arrays are component-major: x[c * count + i] is component c of path
// i in the current block. The scalar reference implementation performs the
// exact same operation sequence per path as the SIMD variants (fma where the
// vector code uses fmadd), so variants are required to agree bit for bit;
// the equivalence tests assert that.
struct Ops {
    const char* name;

    // x <- E x + S z, with E, S row-major d x d.
    void (*ar1_step)(int d, const double* E, const double* S, double* x,
                     const double* z, int count);

    // Running maximum of the quadratic gauge g(k) = k' M k over time steps,
    // with k = x + shift. Tracks the maximizing step (first index wins ties,
    // strict > comparison) and, when dir != nullptr, the Danskin coefficient
    // c = 2 (M k) . dir captured at the maximizer.
    void (*gauge_quad_update)(int d, const double* M, const double* shift,
                              const double* dir, const double* x,
                              std::int32_t j, double* gmax, std::int32_t* jstar,
                              double* cstar, int count);

    // acc += scale * (coeff . x) per path.
    void (*dot_accum)(int d, const double* coeff, double scale,
                      const double* x, double* acc, int count);
};

// Runtime-selected variant. Honors OULAB_SIMD={auto,scalar,avx2}; "auto"
// picks AVX2 when the CPU supports it.
const Ops& ops();

const Ops& scalar_ops();

// nullptr when this build/CPU has no AVX2 path.
const Ops* avx2_ops();

}  // namespace oulab::kern
