#include "oulab/pathlaw.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "oulab/mathutil.hpp"
#include "oulab/rng.hpp"
#include "oulab/sweep.hpp"

namespace oulab {

DyadicGrid DyadicGrid::make(double T, int level) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw Error(ErrorKind::invalid_input, "DyadicGrid: T must be positive and finite");
    if (level < 1 || level > 24)
        throw Error(ErrorKind::invalid_input, "DyadicGrid: level out of range [1,24]");
    return DyadicGrid{T, level};
}

std::vector<double> DyadicGrid::points() const {
    std::vector<double> p(steps());
    for (int j = 1; j <= steps(); ++j) p[j - 1] = t(j);
    return p;
}

Mat GridGaussian::inverse() const {
    return cov.ldlt().solve(Mat::Identity(cov.rows(), cov.cols()));
}

Vec GridGaussian::solve(const Vec& r) const { return cov.ldlt().solve(r); }

GridGaussian grid_covariance(const OUModel& model, const DyadicGrid& grid) {
    const int d = model.dim;
    const int N = grid.steps();
    GridGaussian gg;
    gg.grid = grid;
    gg.dim = d;
    gg.cov.resize(d * N, d * N);

    // Block (i,j) = K(t_{i+1}, t_{j+1}) = e^{(t_i - t_j)A} Q_{t_j} for i >= j.
    // All gaps are multiples of dt, so e^{gap A} comes from repeated squaring
    // of e^{dt A} computed once.
    std::vector<Mat> Q(N + 1);
    for (int j = 1; j <= N; ++j) Q[j] = gram_Qt(model, grid.t(j));
    std::vector<Mat> Egap(N);  // Egap[k] = e^{k dt A}
    Egap[0] = Mat::Identity(d, d);
    const Mat E1 = expm(model.A, grid.dt());
    for (int k = 1; k < N; ++k) Egap[k] = Egap[k - 1] * E1;

    for (int i = 0; i < N; ++i) {
        for (int j = 0; j <= i; ++j) {
            const Mat B = Egap[i - j] * Q[j + 1];
            gg.cov.block(i * d, j * d, d, d) = B;
            if (j != i) gg.cov.block(j * d, i * d, d, d) = B.transpose();
        }
    }
    gg.cov = 0.5 * (gg.cov + gg.cov.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Mat> es(gg.cov);
    const Vec lam = es.eigenvalues();
    gg.min_eig = lam.minCoeff();
    const double lmax = lam.maxCoeff();
    if (!(gg.min_eig > 0.0)) {
        throw Error(ErrorKind::conditioning,
                    "grid_covariance: covariance not positive definite (min eig " +
                        std::to_string(gg.min_eig) + ")");
    }
    gg.log_condition = std::log10(lmax / gg.min_eig);
    // Spectral factor with eigenvalue floor at 1e-12 * lambda_max: grid
    // covariances are invertible at fixed n but become ill-conditioned as n
    // grows.
    const double floor = 1e-12 * lmax;
    Vec lam_f = lam.cwiseMax(floor);
    gg.factor = es.eigenvectors() * lam_f.cwiseSqrt().asDiagonal();
    return gg;
}

namespace {

PathBatch alloc_batch(const OUModel& model, const DyadicGrid& grid,
                      std::uint64_t seed, std::uint32_t stream, std::int64_t m) {
    PathBatch b;
    b.grid = grid;
    b.dim = model.dim;
    b.m = m;
    b.seed = seed;
    b.stream = stream;
    b.values.assign(static_cast<std::size_t>(m) * grid.steps() * model.dim, 0.0);
    return b;
}

}  // namespace

PathBatch sample_wa_ar1(const OUModel& model, const DyadicGrid& grid,
                        std::uint64_t seed, std::uint32_t stream,
                        std::int64_t m) {
    const int d = model.dim;
    const int N = grid.steps();
    const Mat E = expm(model.A, grid.dt());
    const PsdOps qd_ops = psd_pseudo_ops(gram_Qt(model, grid.dt()));
    if (qd_ops.rank < d && kalman_rank(model))
        throw Error(ErrorKind::model, "sample_wa_ar1: one-step covariance rank-deficient");
    const Mat& S = qd_ops.sqrt;

    PathBatch batch = alloc_batch(model, grid, seed, stream, m);
    const std::uint64_t key = philox_key(seed, stream);
    block_parallel(m, 1, [&](std::int64_t p0, int count, std::int64_t) {
        NormalStream ns;
        Vec x(d), z(d);
        for (int i = 0; i < count; ++i) {
            const std::int64_t p = p0 + i;
            ns.reset(key, static_cast<std::uint64_t>(p));
            x.setZero();
            double* row = batch.values.data() + static_cast<std::size_t>(p) * N * d;
            for (int j = 0; j < N; ++j) {
                for (int c = 0; c < d; ++c) z(c) = ns.next();
                x = (E * x + S * z).eval();
                for (int c = 0; c < d; ++c) row[j * d + c] = x(c);
            }
        }
    });
    return batch;
}

PathBatch sample_wa_joint(const OUModel& model, const DyadicGrid& grid,
                          std::uint64_t seed, std::uint32_t stream,
                          std::int64_t m) {
    const GridGaussian gg = grid_covariance(model, grid);
    const int d = model.dim;
    const int N = grid.steps();
    const int M = d * N;
    PathBatch batch = alloc_batch(model, grid, seed, stream, m);
    const std::uint64_t key = philox_key(seed, stream);
    block_parallel(m, 1, [&](std::int64_t p0, int count, std::int64_t) {
        NormalStream ns;
        Vec z(M);
        for (int i = 0; i < count; ++i) {
            const std::int64_t p = p0 + i;
            ns.reset(key, static_cast<std::uint64_t>(p));
            for (int k = 0; k < M; ++k) z(k) = ns.next();
            const Vec path = gg.factor * z;
            double* row = batch.values.data() + static_cast<std::size_t>(p) * N * d;
            std::memcpy(row, path.data(), sizeof(double) * M);
        }
    });
    return batch;
}

PathBatch sample_X(const OUModel& model, const Vec& x, const DyadicGrid& grid,
                   std::uint64_t seed, std::uint32_t stream, std::int64_t m) {
    PathBatch batch = sample_wa_ar1(model, grid, seed, stream, m);
    const int d = model.dim;
    const int N = grid.steps();
    std::vector<Vec> drift(N);
    for (int j = 1; j <= N; ++j) drift[j - 1] = expm(model.A, grid.t(j)) * x;
    for (std::int64_t p = 0; p < m; ++p) {
        double* row = batch.values.data() + static_cast<std::size_t>(p) * N * d;
        for (int j = 0; j < N; ++j)
            for (int c = 0; c < d; ++c) row[j * d + c] += drift[j](c);
    }
    return batch;
}

IbpResult gaussian_ibp_residual(const OUModel& model, const DyadicGrid& grid,
                                const GridFunctional& testfn, const Vec& w,
                                std::uint64_t seed, std::uint32_t stream,
                                std::int64_t m) {
    const GridGaussian gg = grid_covariance(model, grid);
    const int M = static_cast<int>(gg.cov.rows());
    if (w.size() != M)
        throw Error(ErrorKind::invalid_input, "gaussian_ibp_residual: weight size mismatch");
    const Vec eta = gg.cov * w;

    const std::uint64_t key = philox_key(seed, stream);
    std::vector<double> lhs_vals(static_cast<std::size_t>(m));
    std::vector<double> rhs_vals(static_cast<std::size_t>(m));
    block_parallel(m, 1, [&](std::int64_t p0, int count, std::int64_t) {
        NormalStream ns;
        Vec z(M);
        for (int i = 0; i < count; ++i) {
            const std::int64_t p = p0 + i;
            ns.reset(key, static_cast<std::uint64_t>(p));
            for (int k = 0; k < M; ++k) z(k) = ns.next();
            const Vec h = gg.factor * z;
            lhs_vals[p] = testfn.dvalue(h, eta);
            rhs_vals[p] = testfn.value(h) * w.dot(h);
        }
    });
    IbpResult r;
    const double ls = pairwise_sum(lhs_vals);
    const double rs = pairwise_sum(rhs_vals);
    std::vector<double> sq(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) sq[i] = lhs_vals[i] * lhs_vals[i];
    const double lss = pairwise_sum(sq);
    for (std::int64_t i = 0; i < m; ++i) sq[i] = rhs_vals[i] * rhs_vals[i];
    const double rss = pairwise_sum(sq);
    std::tie(r.lhs, r.lhs_se) = mean_se(ls, lss, m);
    std::tie(r.rhs, r.rhs_se) = mean_se(rs, rss, m);
    const double comb = std::sqrt(r.lhs_se * r.lhs_se + r.rhs_se * r.rhs_se);
    r.residual_in_se = comb > 0.0 ? std::abs(r.lhs - r.rhs) / comb : 0.0;
    return r;
}

void write_batch_csv(const PathBatch& batch, const std::string& path,
                     const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::config, "cannot write " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "path_id,j,t";
    for (int c = 1; c <= batch.dim; ++c) out << ",x_" << c;
    out << "\n";
    char buf[64];
    for (std::int64_t p = 0; p < batch.m; ++p) {
        for (int j = 1; j <= batch.grid.steps(); ++j) {
            out << p << "," << j << ",";
            std::snprintf(buf, sizeof buf, "%.17g", batch.grid.t(j));
            out << buf;
            for (int c = 0; c < batch.dim; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", batch.at(p, j, c));
                out << "," << buf;
            }
            out << "\n";
        }
    }
}

namespace {
constexpr char kBatchMagic[8] = {'O', 'U', 'B', 'A', 'T', 'C', 'H', '1'};
}

void write_batch_binary(const PathBatch& batch, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::config, "cannot write " + path);
    out.write(kBatchMagic, 8);
    const std::int64_t d = batch.dim, n = batch.grid.level, m = batch.m;
    const std::uint64_t seed = batch.seed, stream = batch.stream;
    const double T = batch.grid.T;
    out.write(reinterpret_cast<const char*>(&d), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&T), 8);
    out.write(reinterpret_cast<const char*>(&m), 8);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    out.write(reinterpret_cast<const char*>(&stream), 8);
    out.write(reinterpret_cast<const char*>(batch.values.data()),
              static_cast<std::streamsize>(batch.values.size() * sizeof(double)));
}

PathBatch read_batch_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, "cannot read " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kBatchMagic, 8) != 0)
        throw Error(ErrorKind::config, path + ": not a path batch file");
    std::int64_t d, n, m;
    std::uint64_t seed, stream;
    double T;
    in.read(reinterpret_cast<char*>(&d), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&T), 8);
    in.read(reinterpret_cast<char*>(&m), 8);
    in.read(reinterpret_cast<char*>(&seed), 8);
    in.read(reinterpret_cast<char*>(&stream), 8);
    PathBatch b;
    b.grid = DyadicGrid::make(T, static_cast<int>(n));
    b.dim = static_cast<int>(d);
    b.m = m;
    b.seed = seed;
    b.stream = static_cast<std::uint32_t>(stream);
    b.values.resize(static_cast<std::size_t>(m) * b.grid.steps() * b.dim);
    in.read(reinterpret_cast<char*>(b.values.data()),
            static_cast<std::streamsize>(b.values.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::config, path + ": truncated batch file");
    return b;
}

}  // namespace oulab
