#include "oulab/rng.hpp"

#include <cmath>

namespace oulab {

namespace detail {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0,
                         std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

inline double to_unit(std::uint64_t bits) {
    // strictly inside (0,1): ((x >> 11) + 0.5) * 2^-53
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::uint64_t key) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k0, k1);
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t philox_key(std::uint64_t seed, std::uint32_t stream) {
    return detail::splitmix64(detail::splitmix64(seed) ^
                              (static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ull));
}

double NormalStream::next() {
    if (has_cache_) {
        has_cache_ = false;
        return cache_;
    }
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(ctr_), static_cast<std::uint32_t>(ctr_ >> 32),
        static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
    ++ctr_;
    const auto out = philox4x32(ctr, key_);
    const std::uint64_t b0 =
        (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b1 =
        (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    const double u1 = to_unit(b0);
    const double u2 = to_unit(b1);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    cache_ = rad * std::sin(ang);
    has_cache_ = true;
    return rad * std::cos(ang);
}

double NormalStream::next_uniform() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(ctr_), static_cast<std::uint32_t>(ctr_ >> 32),
        static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
    ++ctr_;
    has_cache_ = false;
    const auto out = philox4x32(ctr, key_);
    const std::uint64_t b0 =
        (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return to_unit(b0);
}

}  // namespace oulab
