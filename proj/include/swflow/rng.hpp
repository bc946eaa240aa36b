#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <string_view>

#include "swflow/core.hpp"

namespace swflow {

namespace detail {

// SplitMix64 finalizer. Full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

}  // namespace detail

/// Counter-based stream: output i is mix64(key + (i+1)*golden), so a stream
/// is a pure function of (key, counter). Substreams derive fresh keys from
/// names or indices, which keeps every consumer of randomness independent:
/// drawing more values in one stream never perturbs another.
class RngStream {
public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream from_seed(std::uint64_t seed) {
    return RngStream(detail::mix64(seed + detail::kGolden));
  }

  RngStream child(std::string_view name) const {
    return RngStream(detail::mix64(key_ ^ fnv1a_str(fnv1a_init(), name)));
  }

  RngStream child(std::uint64_t index) const {
    return RngStream(detail::mix64(key_ + detail::kGolden * (index + 1)));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + detail::kGolden * counter_);
  }

  /// Uniform on [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard Gaussian via Box-Muller (cos branch); consumes two counters.
  double next_gaussian() {
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t next_bounded(std::uint64_t n) {
    auto m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t key() const { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// First `count` entries of a partial Fisher-Yates shuffle of 0..n-1:
/// a uniform sample of `count` distinct indices.
inline std::vector<std::uint64_t> sample_without_replacement(
    std::uint64_t n, std::uint64_t count, RngStream stream) {
  if (count > n) {
    throw DataError("sample_without_replacement: count " + std::to_string(count) +
                    " exceeds population " + std::to_string(n));
  }
  std::vector<std::uint64_t> indices(n);
  for (std::uint64_t i = 0; i < n; ++i) indices[i] = i;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + stream.next_bounded(n - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(count);
  return indices;
}

}  // namespace swflow
