#pragma once

#include <cstdint>
#include <cstddef>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swflow {

/// Malformed input: bad files, dimension mismatches, invalid configuration.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: non-finite particles, degenerate draws, overflow.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// N points in d dimensions, row-major. `generation` counts flow iterations
/// applied to the cloud (0 for freshly sampled or loaded data).
struct PointCloud {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;  // n * d, row-major
  std::int64_t generation = 0;

  PointCloud() = default;
  PointCloud(std::size_t n_, std::size_t d_)
      : n(n_), d(d_), values(n_ * d_, 0.0) {}

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * d, d};
  }
  std::span<double> row(std::size_t i) {
    return {values.data() + i * d, d};
  }
  double& at(std::size_t i, std::size_t j) { return values[i * d + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * d + j]; }
};

inline void require_finite(const PointCloud& cloud, std::string_view what) {
  for (std::size_t i = 0; i < cloud.n; ++i) {
    for (double v : cloud.row(i)) {
      if (!std::isfinite(v)) {
        throw NumericalError(std::string(what) + ": non-finite entry at point " +
                             std::to_string(i));
      }
    }
  }
}

// FNV-1a, used for content fingerprints (not cryptographic).
inline std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ull; }

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t h, std::uint64_t v) {
  return fnv1a(h, &v, sizeof(v));
}

inline std::uint64_t fnv1a_f64(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, sizeof(v));
  return fnv1a_u64(h, bits);
}

inline std::uint64_t fnv1a_str(std::uint64_t h, std::string_view s) {
  return fnv1a(h, s.data(), s.size());
}

}  // namespace swflow
