#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "swflow/core.hpp"

namespace swflow {

/// Empirical quantile function on the midpoint level grid (j+0.5)/Q.
/// Values are non-decreasing; levels are implicit from Q, so the CDF
/// (generalized inverse) and the quantile function share one grid.
struct QuantileTable {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  double level(std::size_t j) const {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(values.size());
  }

  void validate() const {
    if (values.size() < 2) {
      throw DataError("QuantileTable: needs at least 2 quantiles");
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!std::isfinite(values[j])) {
        throw DataError("QuantileTable: non-finite value at index " +
                        std::to_string(j));
      }
      if (j > 0 && values[j] < values[j - 1]) {
        throw DataError("QuantileTable: values decrease at index " +
                        std::to_string(j));
      }
    }
  }
};

namespace detail {

// Quantile at level tau of sorted samples: linear interpolation between
// order statistics at continuous position tau*n - 0.5, clamped to [0, n-1].
// Written as (j+0.5)*(n/q) - 0.5 so that q == n lands on position j exactly
// and the table reproduces the sorted samples bit-for-bit.
inline QuantileTable table_from_sorted(std::span<const double> sorted,
                                       std::size_t q) {
  const std::size_t n = sorted.size();
  QuantileTable table;
  table.values.resize(q);
  const double ratio = static_cast<double>(n) / static_cast<double>(q);
  for (std::size_t j = 0; j < q; ++j) {
    double pos = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    if (pos <= 0.0) {
      table.values[j] = sorted.front();
      continue;
    }
    if (pos >= static_cast<double>(n - 1)) {
      table.values[j] = sorted.back();
      continue;
    }
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    table.values[j] = sorted[i] + frac * (sorted[i + 1] - sorted[i]);
  }
  return table;
}

}  // namespace detail

inline QuantileTable build_quantile_table(std::span<const double> samples,
                                          std::size_t q) {
  if (samples.empty()) {
    throw DataError("build_quantile_table: empty sample set");
  }
  if (q < 2) {
    throw DataError("build_quantile_table: quantile count must be >= 2");
  }
  for (double v : samples) {
    if (std::isnan(v)) {
      throw DataError("build_quantile_table: NaN in samples");
    }
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return detail::table_from_sorted(sorted, q);
}

/// As build_quantile_table, for input already sorted ascending.
inline QuantileTable build_quantile_table_sorted(std::span<const double> sorted,
                                                 std::size_t q) {
  if (sorted.empty()) {
    throw DataError("build_quantile_table_sorted: empty sample set");
  }
  if (q < 2) {
    throw DataError("build_quantile_table_sorted: quantile count must be >= 2");
  }
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw DataError("build_quantile_table_sorted: input not sorted");
  }
  return detail::table_from_sorted(sorted, q);
}

/// Piecewise-linear quantile function; flat extrapolation outside the grid.
inline double eval_quantile(const QuantileTable& table, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw DataError("eval_quantile: tau outside [0,1]");
  }
  const std::size_t q = table.size();
  if (tau <= table.level(0)) return table.values.front();
  if (tau >= table.level(q - 1)) return table.values.back();
  // Arithmetic guess for the segment, then nudge so that
  // level(j) <= tau < level(j+1). Keeps tau == level(j) exact.
  const double pos = tau * static_cast<double>(q) - 0.5;
  std::size_t j = pos <= 0.0 ? 0 : static_cast<std::size_t>(pos);
  j = std::min(j, q - 2);
  while (j > 0 && tau < table.level(j)) --j;
  while (j + 2 < q && tau >= table.level(j + 1)) ++j;
  const double lo = table.level(j);
  const double hi = table.level(j + 1);
  const double t = (tau - lo) / (hi - lo);
  return table.values[j] + t * (table.values[j + 1] - table.values[j]);
}

/// Generalized inverse of eval_quantile. Clamps strictly outside the value
/// range; a value shared by several knots maps to the midpoint of its level
/// run (symmetric tie handling for duplicated samples).
inline double eval_cdf(const QuantileTable& table, double z) {
  if (std::isnan(z)) {
    throw DataError("eval_cdf: NaN input");
  }
  const std::size_t q = table.size();
  if (z < table.values.front()) return table.level(0);
  if (z > table.values.back()) return table.level(q - 1);
  const auto [first, last] =
      std::equal_range(table.values.begin(), table.values.end(), z);
  if (first != last) {
    const auto a = static_cast<std::size_t>(first - table.values.begin());
    const auto b = static_cast<std::size_t>(last - table.values.begin()) - 1;
    return 0.5 * (table.level(a) + table.level(b));
  }
  const auto i = static_cast<std::size_t>(first - table.values.begin()) - 1;
  const double t = (z - table.values[i]) / (table.values[i + 1] - table.values[i]);
  return table.level(i) + t * (table.level(i + 1) - table.level(i));
}

namespace detail {

inline QuantileTable resample_table(const QuantileTable& table, std::size_t q) {
  QuantileTable out;
  out.values.resize(q);
  for (std::size_t j = 0; j < q; ++j) {
    const double tau = (static_cast<double>(j) + 0.5) / static_cast<double>(q);
    out.values[j] = eval_quantile(table, tau);
  }
  return out;
}

}  // namespace detail

/// Closed-form 1D Wasserstein-2 distance: the L2 norm of the quantile
/// difference, midpoint quadrature on the shared level grid. Tables with
/// different Q are resampled onto the finer grid first.
inline double w2_1d(const QuantileTable& table_a, const QuantileTable& table_b) {
  const QuantileTable* a = &table_a;
  const QuantileTable* b = &table_b;
  QuantileTable ra, rb;
  if (table_a.size() != table_b.size()) {
    const std::size_t q = std::max(table_a.size(), table_b.size());
    ra = detail::resample_table(table_a, q);
    rb = detail::resample_table(table_b, q);
    a = &ra;
    b = &rb;
  }
  const std::size_t q = a->size();
  double sum = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    const double diff = a->values[j] - b->values[j];
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(q));
}

/// Derivative of the 1D Kantorovich potential from the particle distribution
/// to the target: psi'(z) = z - Q_target(F_particles(z)). The increasing
/// arrangement map is z - psi'(z).
inline double potential_derivative(double z, const QuantileTable& particle_table,
                                   const QuantileTable& target_table) {
  return z - eval_quantile(target_table, eval_cdf(particle_table, z));
}

}  // namespace swflow
