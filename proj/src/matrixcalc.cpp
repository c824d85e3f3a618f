#include "oulab/matrixcalc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace oulab {

namespace {

// Pade approximants for scaling-and-squaring (Higham 2005). Degree picked by
// the 1-norm of tA.
const double kTheta3 = 1.495585217958292e-2;
const double kTheta5 = 2.539398330063230e-1;
const double kTheta7 = 9.504178996162932e-1;
const double kTheta9 = 2.097847961257068e0;
const double kTheta13 = 5.371920351148152e0;

Mat pade_eval(const Mat& M, const std::vector<double>& b) {
    // (degree+1)/2 even/odd splitting.
    const int d = static_cast<int>(M.rows());
    const Mat I = Mat::Identity(d, d);
    const Mat M2 = M * M;
    Mat U = Mat::Zero(d, d);
    Mat V = Mat::Zero(d, d);
    // b listed from constant term upward.
    Mat pow = I;  // M^0
    for (std::size_t k = 0; k < b.size(); k += 2) {
        V += b[k] * pow;
        if (k + 1 < b.size()) U += b[k + 1] * pow;
        if (k + 2 < b.size()) pow = pow * M2;
    }
    U = M * U;
    // p = V + U, q = V - U; solve q X = p.
    return (V - U).partialPivLu().solve(V + U);
}

Mat pade13(const Mat& M) {
    static const std::vector<double> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const int d = static_cast<int>(M.rows());
    const Mat I = Mat::Identity(d, d);
    const Mat M2 = M * M;
    const Mat M4 = M2 * M2;
    const Mat M6 = M4 * M2;
    Mat U = M * (M6 * (b[13] * M6 + b[11] * M4 + b[9] * M2) + b[7] * M6 +
                 b[5] * M4 + b[3] * M2 + b[1] * I);
    Mat V = M6 * (b[12] * M6 + b[10] * M4 + b[8] * M2) + b[6] * M6 + b[4] * M4 +
            b[2] * M2 + b[0] * I;
    return (V - U).partialPivLu().solve(V + U);
}

}  // namespace

Mat expm(const Mat& A, double t) {
    if (!A.allFinite() || !std::isfinite(t))
        throw Error(ErrorKind::invalid_input, "expm: non-finite input");
    if (A.rows() != A.cols())
        throw Error(ErrorKind::invalid_input, "expm: matrix not square");
    const int d = static_cast<int>(A.rows());
    Mat M = t * A;
    const double nrm = M.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    if (nrm == 0.0) return Mat::Identity(d, d);
    if (nrm <= kTheta3) return pade_eval(M, {120, 60, 12, 1});
    if (nrm <= kTheta5) return pade_eval(M, {30240, 15120, 3360, 420, 30, 1});
    if (nrm <= kTheta7)
        return pade_eval(M, {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1});
    if (nrm <= kTheta9)
        return pade_eval(M, {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                             30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0});
    int squarings = 0;
    if (nrm > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
        M *= std::ldexp(1.0, -squarings);
    }
    Mat R = pade13(M);
    for (int k = 0; k < squarings; ++k) R = R * R;
    return R;
}

OUModel OUModel::make(const Mat& A, const Mat& C) {
    if (!A.allFinite() || !C.allFinite())
        throw Error(ErrorKind::invalid_input, "OUModel: non-finite entries");
    if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows())
        throw Error(ErrorKind::invalid_input, "OUModel: A and C must be square with equal size");
    const double cscale = std::max(C.cwiseAbs().maxCoeff(), 1e-300);
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * cscale)
        throw Error(ErrorKind::invalid_input, "OUModel: C is not symmetric (1e-12 relative)");
    OUModel m;
    m.dim = static_cast<int>(A.rows());
    m.A = A;
    m.C = 0.5 * (C + C.transpose());

    Eigen::SelfAdjointEigenSolver<Mat> es(m.C);
    const double cnorm = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(cnorm, 1e-300))
        throw Error(ErrorKind::invalid_input, "OUModel: C has a negative eigenvalue");
    Vec lam = es.eigenvalues().cwiseMax(0.0);
    m.sqrtC = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
              es.eigenvectors().transpose();
    m.sqrtC = 0.5 * (m.sqrtC + m.sqrtC.transpose()).eval();
    return m;
}

Mat gram_Qt(const OUModel& model, double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw Error(ErrorKind::invalid_input, "gram_Qt: t must be finite and >= 0");
    const int d = model.dim;
    if (t == 0.0) return Mat::Zero(d, d);
    // Van Loan block: exp(t [[-A, C],[0, A']]) has (1,2) block
    // int_0^t e^{-A(t-s)} C e^{A's} ds, so Q_t = e^{At} * that block.
    Mat M = Mat::Zero(2 * d, 2 * d);
    M.topLeftCorner(d, d) = -model.A;
    M.topRightCorner(d, d) = model.C;
    M.bottomRightCorner(d, d) = model.A.transpose();
    const Mat E = expm(M, t);
    Mat Q = E.bottomRightCorner(d, d).transpose() * E.topRightCorner(d, d);
    return 0.5 * (Q + Q.transpose());
}

namespace {

// Composite Gauss-Legendre with interval doubling until the result moves by
// less than rel_tol. Nodes/weights: 10-point rule on [-1,1].
const double kGlx[10] = {-0.9739065285171717, -0.8650633666889845,
                         -0.6794095682990244, -0.4333953941292472,
                         -0.1488743389816312, 0.1488743389816312,
                         0.4333953941292472,  0.6794095682990244,
                         0.8650633666889845,  0.9739065285171717};
const double kGlw[10] = {0.0666713443086881, 0.1494513491505806,
                         0.2190863625159820, 0.2692667193099963,
                         0.2955242247147529, 0.2955242247147529,
                         0.2692667193099963, 0.2190863625159820,
                         0.1494513491505806, 0.0666713443086881};

template <typename F>
Mat composite_gl(const F& f, double lo, double hi, int cells, int d) {
    Mat acc = Mat::Zero(d, d);
    const double w = (hi - lo) / cells;
    for (int c = 0; c < cells; ++c) {
        const double a = lo + c * w;
        const double mid = a + 0.5 * w;
        for (int q = 0; q < 10; ++q)
            acc += (0.5 * w * kGlw[q]) * f(mid + 0.5 * w * kGlx[q]);
    }
    return acc;
}

template <typename F>
Mat doubling_gl(const F& f, double lo, double hi, int d, double rel_tol,
                const char* what) {
    Mat prev = composite_gl(f, lo, hi, 1, d);
    for (int cells = 2; cells <= 1024; cells *= 2) {
        Mat cur = composite_gl(f, lo, hi, cells, d);
        const double scale = std::max(cur.cwiseAbs().maxCoeff(), 1e-300);
        if ((cur - prev).cwiseAbs().maxCoeff() <= rel_tol * scale) return cur;
        prev = cur;
    }
    throw Error(ErrorKind::accuracy, std::string(what) + ": quadrature did not converge");
}

}  // namespace

Mat gram_Qt_quadrature(const OUModel& model, double t, double rel_tol) {
    if (t == 0.0) return Mat::Zero(model.dim, model.dim);
    auto f = [&](double s) -> Mat {
        const Mat e = expm(model.A, s);
        return e * model.C * e.transpose();
    };
    return doubling_gl(f, 0.0, t, model.dim, rel_tol, "gram_Qt_quadrature");
}

Mat gram_U(const OUModel& model, double T) {
    if (!(T > 0.0))
        throw Error(ErrorKind::invalid_input, "gram_U: T must be > 0");
    const int d = model.dim;
    // 3-block Van Loan: exp(T [[-A, C, 0],[0, A', I],[0, 0, A']]) has (1,3)
    // block int_0^T s e^{-A(T-s)} C e^{A's} ds.
    Mat M = Mat::Zero(3 * d, 3 * d);
    M.block(0, 0, d, d) = -model.A;
    M.block(0, d, d, d) = model.C;
    M.block(d, d, d, d) = model.A.transpose();
    M.block(d, 2 * d, d, d) = Mat::Identity(d, d);
    M.block(2 * d, 2 * d, d, d) = model.A.transpose();
    const Mat E = expm(M, T);
    Mat U = E.block(d, d, d, d).transpose() * E.block(0, 2 * d, d, d);
    U = 0.5 * (U + U.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(U);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(lmax, 1e-300))
        throw Error(ErrorKind::model,
                    "gram_U: U numerically singular (Hypothesis 1 fails or T too small)");
    return U;
}

Mat gram_U_quadrature(const OUModel& model, double T, double rel_tol) {
    auto f = [&](double s) -> Mat {
        const Mat e = expm(model.A, s);
        return s * (e * model.C * e.transpose());
    };
    return doubling_gl(f, 0.0, T, model.dim, rel_tol, "gram_U_quadrature");
}

Mat kernel_K(const OUModel& model, double t, double s) {
    if (s < 0.0 || t < 0.0)
        throw Error(ErrorKind::invalid_input, "kernel_K: negative time");
    if (s <= t) return expm(model.A, t - s) * gram_Qt(model, s);
    return (expm(model.A, s - t) * gram_Qt(model, t)).transpose();
}

bool kalman_rank(const OUModel& model, double rel_cutoff) {
    const int d = model.dim;
    Mat K(d, d * d);
    Mat block = model.sqrtC;
    for (int k = 0; k < d; ++k) {
        K.block(0, k * d, d, d) = block;
        block = model.A * block;
    }
    Eigen::JacobiSVD<Mat> svd(K);
    const double smax = svd.singularValues()(0);
    if (smax <= 0.0) return false;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > rel_cutoff * smax) ++rank;
    return rank == d;
}

HypothesisReport check_hypothesis1(const OUModel& model,
                                   const std::vector<double>& times) {
    if (times.empty())
        throw Error(ErrorKind::invalid_input, "check_hypothesis1: no probe times");
    for (double t : times)
        if (!(t > 0.0))
            throw Error(ErrorKind::invalid_input, "check_hypothesis1: times must be > 0");
    HypothesisReport rep;
    rep.kalman_rank_ok = kalman_rank(model);
    rep.probed_times = times;
    bool all_pos = true;
    rep.min_det_Qt = std::numeric_limits<double>::infinity();
    for (double t : times) {
        const Mat Q = gram_Qt(model, t);
        Eigen::SelfAdjointEigenSolver<Mat> es(Q);
        const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
        const bool pos = es.eigenvalues().minCoeff() > 1e-12 * std::max(lmax, 1e-300);
        all_pos = all_pos && pos;
        const double det = Q.determinant();
        rep.probed_dets.push_back(det);
        rep.min_det_Qt = std::min(rep.min_det_Qt, det);
    }
    rep.consistent = (rep.kalman_rank_ok == all_pos);
    if (!rep.consistent)
        throw Error(ErrorKind::internal,
                    "check_hypothesis1: rank and determinant checks disagree "
                    "(quadrature or conditioning failure)");
    return rep;
}

PsdOps psd_pseudo_ops(const Mat& M, double rel_cutoff) {
    const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error(ErrorKind::invalid_input, "psd_pseudo_ops: input not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    const Vec lam = es.eigenvalues();
    const Mat& V = es.eigenvectors();
    const double lmax = lam.cwiseAbs().maxCoeff();
    const double cut = rel_cutoff * std::max(lmax, 0.0);
    const int d = static_cast<int>(M.rows());
    Vec sq = Vec::Zero(d), inv = Vec::Zero(d), isq = Vec::Zero(d);
    PsdOps out;
    for (int i = 0; i < d; ++i) {
        if (lam(i) > cut) {
            sq(i) = std::sqrt(lam(i));
            inv(i) = 1.0 / lam(i);
            isq(i) = 1.0 / sq(i);
            ++out.rank;
        }
    }
    out.sqrt = V * sq.asDiagonal() * V.transpose();
    out.pinv = V * inv.asDiagonal() * V.transpose();
    out.pinv_sqrt = V * isq.asDiagonal() * V.transpose();
    return out;
}

double op_norm(const Mat& M) {
    return Eigen::JacobiSVD<Mat>(M).singularValues()(0);
}

namespace {

std::vector<double> parse_numbers(const std::string& text) {
    std::istringstream is(text);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

}  // namespace

OUModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "model file not readable: " + path);
    int d = 0;
    std::vector<double> a_vals, c_vals;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key == "d") {
            d = static_cast<int>(parse_numbers(val).at(0));
        } else if (key == "A") {
            a_vals = parse_numbers(val);
        } else if (key == "C") {
            c_vals = parse_numbers(val);
        } else if (!key.empty()) {
            throw Error(ErrorKind::config, path + ":" + std::to_string(lineno) +
                                               ": unknown key '" + key + "'");
        }
    }
    if (d <= 0) throw Error(ErrorKind::config, path + ": missing or invalid 'd'");
    if (static_cast<int>(a_vals.size()) != d * d)
        throw Error(ErrorKind::config, path + ": field A: expected " +
                                           std::to_string(d * d) + " entries");
    if (static_cast<int>(c_vals.size()) != d * d)
        throw Error(ErrorKind::config, path + ": field C: expected " +
                                           std::to_string(d * d) + " entries");
    Mat A(d, d), C(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            A(i, j) = a_vals[i * d + j];
            C(i, j) = c_vals[i * d + j];
        }
    try {
        return OUModel::make(A, C);
    } catch (const Error& e) {
        throw Error(ErrorKind::config, path + ": field C: " + e.what());
    }
}

void save_model_file(const OUModel& model, const std::string& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "d = " << model.dim << "\n";
    out << "A =";
    for (int i = 0; i < model.dim; ++i)
        for (int j = 0; j < model.dim; ++j) out << " " << model.A(i, j);
    out << "\nC =";
    for (int i = 0; i < model.dim; ++i)
        for (int j = 0; j < model.dim; ++j) out << " " << model.C(i, j);
    out << "\n";
}

}  // namespace oulab
