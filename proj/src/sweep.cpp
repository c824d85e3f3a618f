#include "oulab/sweep.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "oulab/kernels.hpp"
#include "oulab/mathutil.hpp"
#include "oulab/rng.hpp"

namespace oulab {

namespace {
constexpr int kBlock = 256;
}

int sweep_block_size() { return kBlock; }

std::pair<double, double> mean_se(double sum, double sumsq, std::int64_t m) {
    const double mean = sum / static_cast<double>(m);
    if (m < 2) return {mean, 0.0};
    double var = (sumsq - sum * sum / static_cast<double>(m)) /
                 static_cast<double>(m - 1);
    if (var < 0.0) var = 0.0;
    return {mean, std::sqrt(var / static_cast<double>(m))};
}

void block_parallel(std::int64_t m, int threads,
                    const std::function<void(std::int64_t, int, std::int64_t)>& body) {
    const std::int64_t blocks = (m + kBlock - 1) / kBlock;
    if (threads < 1) threads = 1;
    std::atomic<std::int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= blocks) return;
            const std::int64_t p0 = b * kBlock;
            const int count = static_cast<int>(std::min<std::int64_t>(kBlock, m - p0));
            body(p0, count, b);
        }
    };
    if (threads == 1 || blocks == 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

double SweepResult::se(int k) const { return mean_se(sum[k], sumsq[k], m).second; }

namespace {

struct FlatGauge {
    bool quad = false;
    std::vector<double> M;          // row-major, quad only
    const ConvexDomain* domain = nullptr;
    std::vector<double> shift;      // [j][c], j = 0..N
    std::vector<double> dir;        // [j][c] or empty
    int stride = 1;
    double g0 = 0.0;                // g(shift_0), the t_0 term
};

struct FlatDot {
    std::vector<double> coeff;  // [j-1][c]
    std::vector<double> scale;  // [j-1]
    int stride = 1;
};

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, int n_out, const Finisher& fin,
                      const BlockSink& sink) {
    const OUModel& model = *spec.model;
    const int d = model.dim;
    const int N = spec.grid.steps();
    const std::int64_t m = spec.opt.m;

    // One-step AR(1) factors, shared by every path.
    const Mat Estep = expm(model.A, spec.grid.dt());
    const PsdOps qd = psd_pseudo_ops(gram_Qt(model, spec.grid.dt()));
    if (qd.rank < d && kalman_rank(model))
        throw Error(ErrorKind::model, "run_sweep: one-step covariance rank-deficient");
    std::vector<double> Eflat(d * d), Sflat(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Eflat[i * d + j] = Estep(i, j);
            Sflat[i * d + j] = qd.sqrt(i, j);
        }

    std::vector<FlatGauge> gauges;
    for (const GaugeTrack& g : spec.gauges) {
        FlatGauge fg;
        fg.domain = g.domain;
        fg.quad = g.domain->kind == ConvexDomain::Kind::quad;
        if (fg.quad) {
            fg.M.resize(d * d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) fg.M[i * d + j] = g.domain->M(i, j);
        }
        fg.stride = g.stride;
        fg.shift.resize(static_cast<std::size_t>(N + 1) * d);
        for (int j = 0; j <= N; ++j)
            for (int c = 0; c < d; ++c) fg.shift[j * d + c] = g.shift[j](c);
        if (!g.dir.empty()) {
            fg.dir.resize(static_cast<std::size_t>(N + 1) * d);
            for (int j = 0; j <= N; ++j)
                for (int c = 0; c < d; ++c) fg.dir[j * d + c] = g.dir[j](c);
        }
        fg.g0 = g.domain->g(g.shift[0]);
        gauges.push_back(std::move(fg));
    }
    std::vector<FlatDot> dots;
    for (const DotTrack& t : spec.dots) {
        FlatDot fd;
        fd.stride = t.stride;
        fd.coeff.resize(static_cast<std::size_t>(N) * d);
        fd.scale = t.scale;
        for (int j = 1; j <= N; ++j)
            for (int c = 0; c < d; ++c) fd.coeff[(j - 1) * d + c] = t.coeff[j - 1](c);
        dots.push_back(std::move(fd));
    }

    const std::uint64_t key = philox_key(spec.opt.seed, spec.opt.stream);
    const kern::Ops& ops = kern::ops();
    const std::int64_t blocks = (m + kBlock - 1) / kBlock;
    std::vector<double> block_sum(static_cast<std::size_t>(blocks) * n_out);
    std::vector<double> block_sumsq(static_cast<std::size_t>(blocks) * n_out);

    block_parallel(m, spec.opt.threads, [&](std::int64_t p0, int count, std::int64_t b) {
        const int ng = static_cast<int>(gauges.size());
        const int nd = static_cast<int>(dots.size());
        std::vector<double> x(static_cast<std::size_t>(d) * count, 0.0);
        std::vector<double> z(static_cast<std::size_t>(d) * count);
        std::vector<double> gmax(static_cast<std::size_t>(ng) * count);
        std::vector<std::int32_t> jstar(static_cast<std::size_t>(ng) * count, 0);
        std::vector<double> cstar(static_cast<std::size_t>(ng) * count, 0.0);
        std::vector<double> dacc(static_cast<std::size_t>(nd) * count, 0.0);
        for (int g = 0; g < ng; ++g)
            for (int i = 0; i < count; ++i) gmax[g * count + i] = gauges[g].g0;

        std::vector<NormalStream> ns(count);
        for (int i = 0; i < count; ++i)
            ns[i].reset(key, static_cast<std::uint64_t>(p0 + i));

        Vec kvec(d);
        for (int j = 1; j <= N; ++j) {
            for (int i = 0; i < count; ++i)
                for (int c = 0; c < d; ++c) z[c * count + i] = ns[i].next();
            ops.ar1_step(d, Eflat.data(), Sflat.data(), x.data(), z.data(), count);
            for (int t = 0; t < nd; ++t) {
                if (j % dots[t].stride != 0) continue;
                ops.dot_accum(d, dots[t].coeff.data() + (j - 1) * d,
                              dots[t].scale[j - 1], x.data(), dacc.data() + t * count,
                              count);
            }
            for (int g = 0; g < ng; ++g) {
                const FlatGauge& fg = gauges[g];
                if (j % fg.stride != 0) continue;
                const double* dirj = fg.dir.empty() ? nullptr : fg.dir.data() + j * d;
                if (fg.quad) {
                    ops.gauge_quad_update(d, fg.M.data(), fg.shift.data() + j * d,
                                          dirj, x.data(), j, gmax.data() + g * count,
                                          jstar.data() + g * count,
                                          cstar.data() + g * count, count);
                } else {
                    for (int i = 0; i < count; ++i) {
                        for (int c = 0; c < d; ++c)
                            kvec(c) = x[c * count + i] + fg.shift[j * d + c];
                        const double v = fg.domain->g(kvec);
                        if (v > gmax[g * count + i]) {
                            gmax[g * count + i] = v;
                            jstar[g * count + i] = j;
                            if (dirj) {
                                const Vec gr = fg.domain->g_grad(kvec);
                                double cd = 0.0;
                                for (int c = 0; c < d; ++c) cd += gr(c) * dirj[c];
                                cstar[g * count + i] = cd;
                            }
                        }
                    }
                }
            }
        }

        PathView view;
        view.p0 = p0;
        view.count = count;
        view.dim = d;
        view.h_T = x.data();
        for (int g = 0; g < ng; ++g) {
            view.gauge_max.push_back(gmax.data() + g * count);
            view.gauge_jstar.push_back(jstar.data() + g * count);
            view.gauge_cstar.push_back(cstar.data() + g * count);
        }
        for (int t = 0; t < nd; ++t) view.dot_acc.push_back(dacc.data() + t * count);

        if (n_out > 0) {
            std::vector<double> out(static_cast<std::size_t>(n_out) * count);
            fin(view, out.data());
            std::vector<double> sq(count);
            for (int k = 0; k < n_out; ++k) {
                const double* row = out.data() + static_cast<std::size_t>(k) * count;
                block_sum[b * n_out + k] =
                    pairwise_sum(std::span<const double>(row, count));
                for (int i = 0; i < count; ++i) sq[i] = row[i] * row[i];
                block_sumsq[b * n_out + k] =
                    pairwise_sum(std::span<const double>(sq.data(), count));
            }
        }
        if (sink) sink(view);
    });

    SweepResult res;
    res.m = m;
    res.sum.assign(n_out, 0.0);
    res.sumsq.assign(n_out, 0.0);
    for (std::int64_t b = 0; b < blocks; ++b)
        for (int k = 0; k < n_out; ++k) {
            res.sum[k] += block_sum[b * n_out + k];
            res.sumsq[k] += block_sumsq[b * n_out + k];
        }
    return res;
}

}  // namespace oulab
