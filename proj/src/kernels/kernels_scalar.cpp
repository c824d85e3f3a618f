#include "oulab/kernels.hpp"

#include "kernels_scalar_impl.hpp"

namespace oulab::kern {

namespace {

void ar1_step_scalar(int d, const double* E, const double* S, double* x,
                     const double* z, int count) {
    double tmp[8];
    for (int i = 0; i < count; ++i) ref::ar1_step_one(d, E, S, x, z, tmp, count, i);
}

void gauge_quad_scalar(int d, const double* M, const double* shift,
                       const double* dir, const double* x, std::int32_t j,
                       double* gmax, std::int32_t* jstar, double* cstar,
                       int count) {
    for (int i = 0; i < count; ++i)
        ref::gauge_quad_one(d, M, shift, dir, x, j, gmax, jstar, cstar, count, i);
}

void dot_accum_scalar(int d, const double* coeff, double scale, const double* x,
                      double* acc, int count) {
    for (int i = 0; i < count; ++i)
        ref::dot_accum_one(d, coeff, scale, x, acc, count, i);
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{"scalar", ar1_step_scalar, gauge_quad_scalar,
                         dot_accum_scalar};
    return ops;
}

}  // namespace oulab::kern
