#pragma once

#include <functional>
#include <memory>

#include "oulab/pathlaw.hpp"

namespace oulab {

// Cameron-Martin translation machinery. The shift family is linear in the
// base state x, so everything is precomputed once per (model, T, grid,
// quad_level) as matrix-valued functions of time:
//
//   u(x,t) = e^{(T-t)A'} U^{-1} e^{TA} x           =: Umat(t) x
//   a(x,t) = int_0^T K(t,s) u(x,s) ds              =: Amat(t) x
//   d(x,t) = e^{tA} x - a(x,t)                     =: Dmat(t) x
//   F(x)   = int_0^T u(x,s) . a(x,s) ds            =  x' Fmat x
//
// a is evaluated by composite Gauss-Legendre quadrature (8 nodes per dyadic
// cell at level quad_level), splitting the inner integral at s = t where the
// kernel changes branch. Construction is accepted only if doubling the level
// moves the results by < 1e-8 relative.
class ShiftKernel {
  public:
    struct QuadNode {
        double s = 0.0;
        double w = 0.0;
        Mat U;  // u(x,s) = U x
    };

    ShiftKernel(const OUModel& model, const DyadicGrid& grid, int quad_level);

    const OUModel& model() const { return model_; }
    const DyadicGrid& grid() const { return grid_; }
    int quad_level() const { return quad_level_; }

    // Time-indexed matrices on the grid, j = 0..2^n.
    const Mat& Umat(int j) const { return u_grid_[j]; }
    const Mat& Amat(int j) const { return a_grid_[j]; }
    const Mat& Dmat(int j) const { return d_grid_[j]; }
    const Mat& Fmat() const { return f_mat_; }

    // Off-grid evaluations (matrix-valued).
    Mat Umat_at(double t) const;
    Mat Amat_at(double t) const;

    Vec u(const Vec& x, int j) const { return u_grid_[j] * x; }
    Vec a(const Vec& x, int j) const { return a_grid_[j] * x; }
    Vec d(const Vec& x, int j) const { return d_grid_[j] * x; }
    double F(const Vec& x) const { return x.dot(f_mat_ * x); }

    // Directional derivative of F: F_x(x) . y = 2 int u(y) . a(x).
    double Fx(const Vec& x, const Vec& y) const { return 2.0 * y.dot(f_mat_ * x); }

    // Computed constants: c_T = sup_s ||e^{sA}||^2 ||U^{-1}||  (|u| bound) and
    // c_{1,T} = c_T sup_t int ||K(t,s)|| ds  (|a| bound).
    double c_T() const { return c_T_; }
    double c_1T() const { return c_1T_; }
    double asym_error() const { return f_asym_; }

    // Quadrature nodes of the accepted level (for the continuous G integral).
    const std::vector<QuadNode>& nodes() const { return level_store_->node_sU; }

  private:
    struct LevelStore {
        int cells = 0;
        double cell_w = 0.0;
        std::vector<Mat> prefixP, suffixR;
        std::vector<QuadNode> node_sU;
    };

    OUModel model_;
    DyadicGrid grid_;
    int quad_level_;
    std::vector<Mat> u_grid_, a_grid_, d_grid_;
    Mat f_mat_;
    double c_T_ = 0.0, c_1T_ = 0.0, f_asym_ = 0.0;
    std::shared_ptr<LevelStore> level_store_;
};

// Per-x view of the shift family on a grid.
struct ShiftData {
    const OUModel* model = nullptr;
    double T = 0.0;
    Vec x;
    DyadicGrid grid;
    int quad_level = 0;
    std::vector<Vec> u_vals;  // j = 1..2^n  (index 0 <-> t_1)
    std::vector<Vec> a_vals;  // j = 0..2^n
    std::vector<Vec> d_vals;  // j = 0..2^n  (d(x,0) = x, d(x,T) ~ 0)
    double F = 0.0;

    static ShiftData make(const ShiftKernel& kernel, const Vec& x);
    void dump_csv(const std::string& path) const;  // (t, u, a, d) for debugging
};

// Point evaluations (thin wrappers; each builds or reuses a kernel).
Vec shift_u(const OUModel& model, double T, const Vec& x, double t);
Vec shift_a(const ShiftKernel& kernel, const Vec& x, double t);
std::vector<Vec> shift_d(const ShiftKernel& kernel, const Vec& x);
double cm_F(const ShiftKernel& kernel, const Vec& x);

// Continuous G(x,h) = int_0^T u(x,s) . h(s) ds for a path given as a
// function, by composite Gauss-Legendre at the kernel's quadrature level.
double cm_G(const ShiftKernel& kernel, const Vec& x,
            const std::function<Vec(double)>& h);

// Discrete G^n(x,h) = sum_j (u(x,t_j) . h(t_j)) (t_j - t_{j-1}), the
// right-endpoint Riemann sum the gradient formulas differentiate exactly.
// h_grid is stacked (h(t_1), ..., h(t_{2^n})).
double cm_G_discrete(const ShiftKernel& kernel, const Vec& x, const Vec& h_grid);

struct CmDerivatives {
    double Fx_y = 0.0;            // F_x(x) . y
    double Gx_y = 0.0;            // G^n_x(x,h) . y = G^n(y,h)
    std::vector<Vec> dxy;         // d_x(x,.) y = d(y,.), j = 0..2^n
};

CmDerivatives cm_derivatives(const ShiftKernel& kernel, const Vec& x,
                             const Vec& y, const Vec& h_grid);

}  // namespace oulab
