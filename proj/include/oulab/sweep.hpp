#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oulab/domain.hpp"
#include "oulab/estimators.hpp"
#include "oulab/pathlaw.hpp"

namespace oulab {

// Streaming Monte Carlo sweep over AR(1) paths. Paths are processed in fixed
// blocks; each path's randomness comes from its own counter-based stream and
// per-block partial sums are merged in block order, so the result is
// bit-identical for any thread count. The per-step arithmetic runs through
// the dispatched SIMD kernels.

// Running gauge maximum along the shifted path, with optional Danskin
// coefficient tracking. stride > 1 restricts updates to the sub-grid
// j % stride == 0 (coarser dyadic levels share the fine path).
struct GaugeTrack {
    const ConvexDomain* domain = nullptr;
    std::vector<Vec> shift;  // j = 0..2^n
    std::vector<Vec> dir;    // optional, j = 0..2^n
    int stride = 1;
};

// acc += scale[j] * (coeff[j] . h(t_j)) over active steps.
struct DotTrack {
    std::vector<Vec> coeff;     // j = 1..2^n (index j-1)
    std::vector<double> scale;  // same indexing
    int stride = 1;
};

struct SweepSpec {
    const OUModel* model = nullptr;
    DyadicGrid grid;
    McOptions opt;
    std::vector<GaugeTrack> gauges;
    std::vector<DotTrack> dots;
};

// Per-block view of the swept quantities, component-major within the block.
struct PathView {
    std::int64_t p0 = 0;
    int count = 0;
    int dim = 0;
    const double* h_T = nullptr;  // [d][count]
    std::vector<const double*> gauge_max;
    std::vector<const std::int32_t*> gauge_jstar;
    std::vector<const double*> gauge_cstar;
    std::vector<const double*> dot_acc;

    double hT(int c, int i) const { return h_T[c * count + i]; }
};

// Fills out[k * count + i] for k < n_out.
using Finisher = std::function<void(const PathView&, double* out)>;
// Optional raw per-block access (e.g. to store per-path values by index).
using BlockSink = std::function<void(const PathView&)>;

struct SweepResult {
    std::vector<double> sum;
    std::vector<double> sumsq;
    std::int64_t m = 0;

    double mean(int k) const { return sum[k] / static_cast<double>(m); }
    double se(int k) const;
};

SweepResult run_sweep(const SweepSpec& spec, int n_out, const Finisher& fin,
                      const BlockSink& sink = nullptr);

// Deterministic block-parallel helper used by the non-path estimators: calls
// body(p0, count, block_index) over fixed blocks of size sweep_block_size().
void block_parallel(std::int64_t m, int threads,
                    const std::function<void(std::int64_t, int, std::int64_t)>& body);
int sweep_block_size();

// mean / stderr from (sum, sumsq, m).
std::pair<double, double> mean_se(double sum, double sumsq, std::int64_t m);

}  // namespace oulab
