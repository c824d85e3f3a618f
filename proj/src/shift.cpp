#include "oulab/shift.hpp"

#include <cmath>
#include <fstream>

#include "oulab/mathutil.hpp"

namespace oulab {

namespace {

// 8-point Gauss-Legendre on [-1,1].
const double kGx[8] = {-0.9602898564975363, -0.7966664774136267,
                       -0.5255324099163290, -0.1834346424956498,
                       0.1834346424956498,  0.5255324099163290,
                       0.7966664774136267,  0.9602898564975363};
const double kGw[8] = {0.1012285362903763, 0.2223810344533745,
                       0.3137066458778873, 0.3626837833783620,
                       0.3626837833783620, 0.3137066458778873,
                       0.2223810344533745, 0.1012285362903763};

struct Node {
    double s = 0.0;
    double w = 0.0;
    Mat U;   // u(x,s) = U x
    Mat P0;  // e^{-sA} Q_s          (left kernel factor: K(t,s) = e^{tA} P0(s), s < t)
    Mat R0;  // e^{sA'}              (right factor: K(t,s) = Q_t e^{-tA'} R0(s), s > t)
};

struct LevelData {
    int cells = 0;
    double cell_w = 0.0;
    std::vector<Node> nodes;       // cells * 8, ordered
    std::vector<Mat> prefixP;      // prefixP[c] = int_0^{c dw} P,  c = 0..cells
    std::vector<Mat> suffixR;      // suffixR[c] = int_{c dw}^T R
    std::vector<Mat> a_grid;       // Amat at grid points
    Mat f_mat;
};

struct Builder {
    const OUModel& model;
    const DyadicGrid& grid;
    double T;
    int d;
    Mat UB;  // U^{-1} e^{TA}

    Mat Umat(double s) const { return expm(model.A.transpose(), T - s) * UB; }

    Node make_node(double s, double w) const {
        Node n;
        n.s = s;
        n.w = w;
        n.U = Umat(s);
        n.P0 = expm(model.A, -s) * gram_Qt(model, s);
        n.R0 = expm(model.A.transpose(), s);
        return n;
    }

    // int over [lo, hi] of P (or R) with fresh 8-point nodes; used for the
    // partial cell around an off-boundary target.
    Mat partial(double lo, double hi, bool left_factor) const {
        Mat acc = Mat::Zero(d, d);
        if (hi <= lo) return acc;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int q = 0; q < 8; ++q) {
            const double s = mid + half * kGx[q];
            const Mat U = Umat(s);
            if (left_factor)
                acc += (half * kGw[q]) * (expm(model.A, -s) * gram_Qt(model, s) * U);
            else
                acc += (half * kGw[q]) * (expm(model.A.transpose(), s) * U);
        }
        return acc;
    }

    Mat amat_at(const LevelData& L, double t) const {
        const double w = L.cell_w;
        int c = static_cast<int>(t / w);
        if (c > L.cells) c = L.cells;
        const double lo = c * w;
        Mat left, right;
        if (std::abs(t - lo) < 1e-14 * T) {
            // cell boundary: pure prefix/suffix
            left = L.prefixP[c];
            right = L.suffixR[c];
        } else {
            left = L.prefixP[c] + partial(lo, t, true);
            right = partial(t, std::min(lo + w, T), false) +
                    (c + 1 <= L.cells ? L.suffixR[c + 1] : Mat::Zero(d, d));
        }
        return expm(model.A, t) * left +
               gram_Qt(model, t) * expm(model.A.transpose(), -t) * right;
    }

    LevelData build(int level) const {
        LevelData L;
        L.cells = 1 << level;
        L.cell_w = T / L.cells;
        L.nodes.reserve(static_cast<std::size_t>(L.cells) * 8);
        for (int c = 0; c < L.cells; ++c) {
            const double mid = (c + 0.5) * L.cell_w, half = 0.5 * L.cell_w;
            for (int q = 0; q < 8; ++q)
                L.nodes.push_back(make_node(mid + half * kGx[q], half * kGw[q]));
        }
        L.prefixP.assign(L.cells + 1, Mat::Zero(d, d));
        L.suffixR.assign(L.cells + 1, Mat::Zero(d, d));
        for (int c = 0; c < L.cells; ++c) {
            Mat cp = Mat::Zero(d, d);
            for (int q = 0; q < 8; ++q) {
                const Node& n = L.nodes[c * 8 + q];
                cp += n.w * (n.P0 * n.U);
            }
            L.prefixP[c + 1] = L.prefixP[c] + cp;
        }
        for (int c = L.cells - 1; c >= 0; --c) {
            Mat cr = Mat::Zero(d, d);
            for (int q = 0; q < 8; ++q) {
                const Node& n = L.nodes[c * 8 + q];
                cr += n.w * (n.R0 * n.U);
            }
            L.suffixR[c] = L.suffixR[c + 1] + cr;
        }
        L.a_grid.resize(grid.steps() + 1);
        for (int j = 0; j <= grid.steps(); ++j) L.a_grid[j] = amat_at(L, grid.t(j));
        // F as the outer integral of u . a over the same composite rule.
        L.f_mat = Mat::Zero(d, d);
        for (const Node& n : L.nodes)
            L.f_mat += n.w * (n.U.transpose() * amat_at(L, n.s));
        return L;
    }
};

double rel_diff(const Mat& a, const Mat& b) {
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-30});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

ShiftKernel::ShiftKernel(const OUModel& model, const DyadicGrid& grid,
                         int quad_level)
    : model_(model), grid_(grid), quad_level_(quad_level) {
    const int d = model.dim;
    const double T = grid.T;
    const Mat U = gram_U(model, T);  // throws ErrorKind::model when singular
    const Mat Uinv = U.ldlt().solve(Mat::Identity(d, d));
    Builder b{model_, grid_, T, d, Uinv * expm(model.A, T)};

    LevelData coarse = b.build(quad_level);
    LevelData fine = b.build(quad_level + 1);
    double worst = rel_diff(coarse.f_mat, fine.f_mat);
    for (int j = 0; j <= grid.steps(); ++j)
        worst = std::max(worst, rel_diff(coarse.a_grid[j], fine.a_grid[j]));
    if (worst > 1e-8)
        throw Error(ErrorKind::accuracy,
                    "ShiftKernel: quadrature did not converge at level " +
                        std::to_string(quad_level) + " (rel change " +
                        std::to_string(worst) + ")");

    u_grid_.resize(grid.steps() + 1);
    a_grid_ = std::move(fine.a_grid);
    d_grid_.resize(grid.steps() + 1);
    for (int j = 0; j <= grid.steps(); ++j) {
        u_grid_[j] = b.Umat(grid.t(j));
        d_grid_[j] = expm(model.A, grid.t(j)) - a_grid_[j];
    }
    f_asym_ = (fine.f_mat - fine.f_mat.transpose()).cwiseAbs().maxCoeff();
    f_mat_ = 0.5 * (fine.f_mat + fine.f_mat.transpose());

    // Computed constants for the |u| and |a| bounds. The s-sample includes
    // every grid point, so the bounds cover all grid evaluations.
    const int ns = std::max(512, 2 * grid.steps());
    double emax = 0.0;
    for (int k = 0; k <= ns; ++k)
        emax = std::max(emax, op_norm(expm(model.A, (T * k) / ns)));
    c_T_ = emax * emax * op_norm(Uinv);
    double kint_max = 0.0;
    for (int j = 0; j <= grid.steps(); ++j) {
        const double t = grid.t(j);
        const Mat Et = expm(model.A, t);
        const Mat QtEmt = gram_Qt(model, t) * expm(model.A.transpose(), -t);
        double acc = 0.0;
        for (const Node& n : fine.nodes) {
            // Frobenius norm dominates the operator norm, so the bound stays valid.
            if (n.s <= t)
                acc += n.w * (Et * n.P0).norm();
            else
                acc += n.w * (QtEmt * n.R0).norm();
        }
        kint_max = std::max(kint_max, acc);
    }
    c_1T_ = c_T_ * kint_max;

    // Retain the fine level for off-grid evaluations.
    level_store_ = std::make_shared<LevelStore>();
    level_store_->cells = fine.cells;
    level_store_->cell_w = fine.cell_w;
    level_store_->prefixP = std::move(fine.prefixP);
    level_store_->suffixR = std::move(fine.suffixR);
    for (const Node& n : fine.nodes)
        level_store_->node_sU.push_back({n.s, n.w, n.U});
}

Mat ShiftKernel::Umat_at(double t) const {
    // Umat(T) = U^{-1} e^{TA}, so any t reuses the cached endpoint matrix.
    return expm(model_.A.transpose(), grid_.T - t) * u_grid_.back();
}

Mat ShiftKernel::Amat_at(double t) const {
    if (t < 0.0 || t > grid_.T)
        throw Error(ErrorKind::invalid_input, "Amat_at: t outside [0, T]");
    Builder b{model_, grid_, grid_.T, model_.dim, u_grid_.back()};
    LevelData L;
    L.cells = level_store_->cells;
    L.cell_w = level_store_->cell_w;
    L.prefixP = level_store_->prefixP;
    L.suffixR = level_store_->suffixR;
    return b.amat_at(L, t);
}

ShiftData ShiftData::make(const ShiftKernel& kernel, const Vec& x) {
    ShiftData s;
    s.model = &kernel.model();
    s.T = kernel.grid().T;
    s.x = x;
    s.grid = kernel.grid();
    s.quad_level = kernel.quad_level();
    const int N = s.grid.steps();
    s.u_vals.reserve(N);
    for (int j = 1; j <= N; ++j) s.u_vals.push_back(kernel.u(x, j));
    s.a_vals.reserve(N + 1);
    s.d_vals.reserve(N + 1);
    for (int j = 0; j <= N; ++j) {
        s.a_vals.push_back(kernel.a(x, j));
        s.d_vals.push_back(kernel.d(x, j));
    }
    s.F = kernel.F(x);
    if (s.F < -1e-10)
        throw Error(ErrorKind::internal,
                    "ShiftData: F(x) negative beyond tolerance (quadrature inconsistency)");
    return s;
}

void ShiftData::dump_csv(const std::string& path) const {
    std::ofstream out(path);
    out << "t";
    const int d = static_cast<int>(x.size());
    for (int c = 1; c <= d; ++c) out << ",u_" << c;
    for (int c = 1; c <= d; ++c) out << ",a_" << c;
    for (int c = 1; c <= d; ++c) out << ",d_" << c;
    out << "\n";
    out.precision(17);
    for (int j = 0; j <= grid.steps(); ++j) {
        out << grid.t(j);
        for (int c = 0; c < d; ++c)
            out << "," << (j >= 1 ? u_vals[j - 1](c) : NAN);
        for (int c = 0; c < d; ++c) out << "," << a_vals[j](c);
        for (int c = 0; c < d; ++c) out << "," << d_vals[j](c);
        out << "\n";
    }
}

Vec shift_u(const OUModel& model, double T, const Vec& x, double t) {
    const Mat U = gram_U(model, T);
    const Mat Uinv = U.ldlt().solve(Mat::Identity(model.dim, model.dim));
    return expm(model.A.transpose(), T - t) * (Uinv * (expm(model.A, T) * x));
}

Vec shift_a(const ShiftKernel& kernel, const Vec& x, double t) {
    return kernel.Amat_at(t) * x;
}

std::vector<Vec> shift_d(const ShiftKernel& kernel, const Vec& x) {
    std::vector<Vec> out;
    out.reserve(kernel.grid().steps() + 1);
    for (int j = 0; j <= kernel.grid().steps(); ++j) out.push_back(kernel.d(x, j));
    return out;
}

double cm_F(const ShiftKernel& kernel, const Vec& x) { return kernel.F(x); }

double cm_G(const ShiftKernel& kernel, const Vec& x,
            const std::function<Vec(double)>& h) {
    double acc = 0.0;
    for (const auto& n : kernel.nodes())
        acc += n.w * (n.U * x).dot(h(n.s));
    return acc;
}

double cm_G_discrete(const ShiftKernel& kernel, const Vec& x, const Vec& h_grid) {
    const int N = kernel.grid().steps();
    const int d = kernel.model().dim;
    if (h_grid.size() != static_cast<Eigen::Index>(N) * d)
        throw Error(ErrorKind::invalid_input, "cm_G_discrete: grid path size mismatch");
    const double dt = kernel.grid().dt();
    double acc = 0.0;
    for (int j = 1; j <= N; ++j)
        acc += dt * (kernel.Umat(j) * x).dot(h_grid.segment((j - 1) * d, d));
    return acc;
}

CmDerivatives cm_derivatives(const ShiftKernel& kernel, const Vec& x,
                             const Vec& y, const Vec& h_grid) {
    CmDerivatives out;
    out.Fx_y = kernel.Fx(x, y);
    out.Gx_y = cm_G_discrete(kernel, y, h_grid);
    out.dxy = shift_d(kernel, y);
    return out;
}

}  // namespace oulab
