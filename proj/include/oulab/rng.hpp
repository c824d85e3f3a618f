#pragma once

#include <array>
#include <cstdint>

namespace oulab {

// Counter-based RNG: Philox4x32-10. A generator is addressed by
// (seed, stream, path) and produces a deterministic sequence of doubles /
// normals for that path, independent of any other path. This makes Monte
// Carlo output a pure function of (seed, stream, m) regardless of how paths
// are partitioned across worker threads.

namespace detail {
std::uint64_t splitmix64(std::uint64_t x);
}

// One Philox block: 128 bits of counter -> 128 bits of output under a 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::uint64_t key);

// Derives the 64-bit Philox key for a (seed, stream) pair.
std::uint64_t philox_key(std::uint64_t seed, std::uint32_t stream);

// Per-path stream of N(0,1) draws (Box-Muller over Philox uniforms).
// next() consumes draws in a fixed order; the k-th draw of a path is the same
// no matter when or where it is generated.
class NormalStream {
  public:
    NormalStream() = default;
    NormalStream(std::uint64_t key, std::uint64_t path)
        : key_(key), path_(path) {}

    void reset(std::uint64_t key, std::uint64_t path) {
        key_ = key;
        path_ = path;
        ctr_ = 0;
        has_cache_ = false;
    }

    double next();

    // Uniform in (0,1), consuming one pair slot (used by samplers that need
    // uniforms; counts against the same counter space as normals).
    double next_uniform();

  private:
    std::uint64_t key_ = 0;
    std::uint64_t path_ = 0;
    std::uint64_t ctr_ = 0;  // Box-Muller pair index
    bool has_cache_ = false;
    double cache_ = 0.0;
};

}  // namespace oulab
