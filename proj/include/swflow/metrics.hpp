#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "swflow/geometry.hpp"
#include "swflow/ot1d.hpp"
#include "swflow/parallel.hpp"
#include "swflow/sketch.hpp"

namespace swflow {

/// Monte-Carlo sliced-Wasserstein estimate: the mean over directions of the
/// per-direction 1D W2 distances, plus the spread needed for error bars.
struct Sw2Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::vector<double> per_direction;
};

namespace detail {

inline Sw2Estimate summarize_per_direction(std::vector<double> w2) {
  Sw2Estimate est;
  est.per_direction = std::move(w2);
  const std::size_t n = est.per_direction.size();
  double sum = 0.0;
  for (double v : est.per_direction) sum += v;
  est.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : est.per_direction) {
      const double c = v - est.mean;
      ss += c * c;
    }
    est.standard_error =
        std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return est;
}

}  // namespace detail

/// SW2 between two point clouds along a shared direction set. Clouds of
/// different sizes are fine: the quantile tables put both on one level grid.
inline Sw2Estimate sw2_estimate_detailed(const PointCloud& a, const PointCloud& b,
                                         const DirectionSet& dirs, std::size_t q) {
  if (a.d != b.d || a.d != dirs.d) {
    throw DataError("sw2_estimate: dimension mismatch between clouds and directions");
  }
  if (a.n == 0 || b.n == 0) throw DataError("sw2_estimate: empty cloud");
  std::vector<double> w2(dirs.n_theta);
  par::parallel_for(dirs.n_theta, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const auto theta = dirs.row(n);
      const auto table_a = build_quantile_table(project(a, theta), q);
      const auto table_b = build_quantile_table(project(b, theta), q);
      w2[n] = w2_1d(table_a, table_b);
    }
  });
  return detail::summarize_per_direction(std::move(w2));
}

inline double sw2_estimate(const PointCloud& a, const PointCloud& b,
                           const DirectionSet& dirs, std::size_t q) {
  return sw2_estimate_detailed(a, b, dirs, q).mean;
}

/// SW2 between a cloud and a sketched target, along the sketch's directions
/// (optionally a subset of them, given as indices into the sketch).
inline Sw2Estimate sw2_to_sketch(const PointCloud& cloud, const TargetSketch& sketch,
                                 std::span<const std::size_t> subset = {}) {
  if (cloud.d != sketch.dimension()) {
    throw DataError("sw2_to_sketch: cloud dimension does not match sketch");
  }
  if (cloud.n == 0) throw DataError("sw2_to_sketch: empty cloud");
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(sketch.n_theta());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    subset = all;
  }
  std::vector<double> w2(subset.size());
  par::parallel_for(subset.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const std::size_t n = subset[m];
      if (n >= sketch.n_theta()) {
        throw DataError("sw2_to_sketch: direction index out of range");
      }
      const auto table =
          build_quantile_table(project(cloud, sketch.directions.row(n)), sketch.q);
      w2[m] = w2_1d(table, sketch.tables[n]);
    }
  });
  return detail::summarize_per_direction(std::move(w2));
}

}  // namespace swflow
