#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace oulab {

// Standard normal CDF.
double norm_cdf(double z);

// Standard normal quantile, accurate to full double precision via a rational
// initial guess refined with one Halley step on erfc.
double norm_quantile(double p);

// Deterministic pairwise summation. Fixed reduction tree shape for a given
// length, so results do not depend on how work was partitioned upstream.
double pairwise_sum(std::span<const double> xs);

// FNV-1a over bytes; used for config hashes (stable across platforms).
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace oulab
