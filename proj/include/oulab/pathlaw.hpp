#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oulab/matrixcalc.hpp"

namespace oulab {

// Dyadic grid t_j = j T / 2^n, j = 1..2^n. The Gaussian path vector excludes
// t_0 = 0 (the stochastic convolution vanishes there a.s.); code that needs
// the j = 0 term evaluates it from the known starting point.
struct DyadicGrid {
    double T = 1.0;
    int level = 1;

    static DyadicGrid make(double T, int level);

    int steps() const { return 1 << level; }
    double dt() const { return T / static_cast<double>(steps()); }
    // j in 0..2^n; t(0) == 0 and t(2^n) == T exactly.
    double t(int j) const { return (T * static_cast<double>(j)) / static_cast<double>(steps()); }
    std::vector<double> points() const;  // j = 1..2^n
};

// Law of the stacked vector (W_A(t_1), ..., W_A(t_{2^n})): covariance blocks
// K(t_i, t_j), spectral factorization with eigenvalue floor, explicit inverse
// on demand. Immutable after construction.
struct GridGaussian {
    DyadicGrid grid;
    int dim = 0;
    Mat cov;           // (d 2^n) x (d 2^n)
    Mat factor;        // cov = factor factor'
    double min_eig = 0.0;
    double log_condition = 0.0;

    Mat inverse() const;        // explicit inverse (use only at small n)
    Vec solve(const Vec& r) const;
};

GridGaussian grid_covariance(const OUModel& model, const DyadicGrid& grid);

struct PathBatch {
    DyadicGrid grid;
    int dim = 0;
    std::int64_t m = 0;
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;
    // values[(p * steps + (j-1)) * d + c] = component c of path p at t_j.
    std::vector<double> values;

    double at(std::int64_t p, int j, int c) const {
        return values[(p * grid.steps() + (j - 1)) * dim + c];
    }
};

// Exact AR(1) recursion W_A(t_{j+1}) = e^{dt A} W_A(t_j) + eta_j with
// eta_j ~ N(0, Q_dt). Default sampler; law on the grid is N_{Q_{T,n}}.
PathBatch sample_wa_ar1(const OUModel& model, const DyadicGrid& grid,
                        std::uint64_t seed, std::uint32_t stream,
                        std::int64_t m);

// Dense sampler: path = factor * z with the full grid covariance. Same law as
// sample_wa_ar1; practical only at small n.
PathBatch sample_wa_joint(const OUModel& model, const DyadicGrid& grid,
                          std::uint64_t seed, std::uint32_t stream,
                          std::int64_t m);

// X(t_j, x) = e^{t_j A} x + W_A(t_j), pathwise on top of the AR(1) sampler.
PathBatch sample_X(const OUModel& model, const Vec& x, const DyadicGrid& grid,
                   std::uint64_t seed, std::uint32_t stream, std::int64_t m);

// A smooth functional of the grid path with a directional derivative, for the
// Gaussian integration-by-parts test.
struct GridFunctional {
    std::function<double(const Vec&)> value;                  // phi(h)
    std::function<double(const Vec&, const Vec&)> dvalue;     // D phi(h) . eta
};

struct IbpResult {
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    double residual_in_se = 0.0;
};

// Checks E[D phi(h) . eta] = E[phi(h) <w, h>] for eta = cov * w, h ~ N(cov).
// The direction is constructed from the weight w, which guarantees
// Cameron-Martin membership on the grid.
IbpResult gaussian_ibp_residual(const OUModel& model, const DyadicGrid& grid,
                                const GridFunctional& testfn, const Vec& w,
                                std::uint64_t seed, std::uint32_t stream,
                                std::int64_t m);

// PathBatch export: CSV columns (path_id, j, t, x_1..x_d) and a binary
// round-trip format with header (d, n, T, m, seed, stream).
void write_batch_csv(const PathBatch& batch, const std::string& path,
                     const std::string& header_comment = "");
void write_batch_binary(const PathBatch& batch, const std::string& path);
PathBatch read_batch_binary(const std::string& path);

}  // namespace oulab
