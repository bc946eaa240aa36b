#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/rng.hpp"

namespace swflow {

enum class DirectionMode : std::uint8_t { Fixed = 0, Resampled = 1 };

/// N_theta unit vectors on S^{d-1}, row-major. Immutable once sampled; the
/// resampled mode tag records that a flow is meant to draw per-iteration
/// subsets from this set rather than use it whole.
struct DirectionSet {
  std::size_t n_theta = 0;
  std::size_t d = 0;
  std::vector<double> values;  // n_theta * d, row-major
  std::uint64_t seed = 0;
  DirectionMode mode = DirectionMode::Fixed;

  std::span<const double> row(std::size_t n) const {
    return {values.data() + n * d, d};
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a_init();
    h = fnv1a_u64(h, n_theta);
    h = fnv1a_u64(h, d);
    for (double v : values) h = fnv1a_f64(h, v);
    return h;
  }
};

/// i.i.d. uniform directions on the unit sphere: normalized standard Gaussian
/// draws, redrawing the (measure-zero) degenerate vectors with norm < 1e-12.
inline DirectionSet sample_directions(std::size_t d, std::size_t n_theta,
                                      std::uint64_t seed,
                                      DirectionMode mode = DirectionMode::Fixed) {
  if (d < 1) throw DataError("sample_directions: dimension must be >= 1");
  if (n_theta < 1) throw DataError("sample_directions: need at least one direction");
  DirectionSet dirs;
  dirs.n_theta = n_theta;
  dirs.d = d;
  dirs.seed = seed;
  dirs.mode = mode;
  dirs.values.resize(n_theta * d);
  RngStream stream = RngStream::from_seed(seed).child("directions");
  for (std::size_t n = 0; n < n_theta; ++n) {
    double* row = dirs.values.data() + n * d;
    for (int attempt = 0;; ++attempt) {
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = stream.next_gaussian();
        norm_sq += row[j] * row[j];
      }
      const double norm = std::sqrt(norm_sq);
      if (norm >= 1e-12) {
        for (std::size_t j = 0; j < d; ++j) row[j] /= norm;
        break;
      }
      if (attempt > 64) {
        throw NumericalError("sample_directions: persistent degenerate draws");
      }
    }
  }
  return dirs;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) sum += a[j] * b[j];
  return sum;
}

/// Orthogonal projection of every point onto a direction: out[i] = <theta, x_i>.
inline std::vector<double> project(const PointCloud& points,
                                   std::span<const double> theta) {
  if (theta.size() != points.d) {
    throw DataError("project: direction dimension " + std::to_string(theta.size()) +
                    " does not match point dimension " + std::to_string(points.d));
  }
  std::vector<double> out(points.n);
  for (std::size_t i = 0; i < points.n; ++i) {
    out[i] = dot(points.row(i), theta);
  }
  return out;
}

}  // namespace swflow
