#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/io.hpp"
#include "swflow/rng.hpp"

namespace swflow {

/// Diagonal-covariance Gaussian mixture.
struct GmmSpec {
  std::size_t n_components = 0;
  std::size_t d = 0;
  std::vector<double> means;      // n_components x d, row-major
  std::vector<double> variances;  // n_components x d, diagonal entries
  std::vector<double> weights;    // n_components, positive, sums to 1
  std::uint64_t seed = 0;

  void validate() const {
    if (n_components < 1 || d < 1) {
      throw DataError("GmmSpec: need at least one component and one dimension");
    }
    if (means.size() != n_components * d || variances.size() != n_components * d ||
        weights.size() != n_components) {
      throw DataError("GmmSpec: parameter sizes do not match shape");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DataError("GmmSpec: weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw DataError("GmmSpec: weights must sum to 1");
    }
    for (double v : variances) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DataError("GmmSpec: covariance entries must be positive");
      }
    }
    for (double m : means) {
      if (!std::isfinite(m)) throw DataError("GmmSpec: non-finite mean");
    }
  }
};

/// i.i.d. mixture samples, one substream per sample so the draw for point i
/// never depends on p.
inline PointCloud gmm_sample(const GmmSpec& spec, std::size_t p) {
  spec.validate();
  if (p < 1) throw DataError("gmm_sample: need at least one sample");
  std::vector<double> cumulative(spec.n_components);
  double acc = 0.0;
  for (std::size_t c = 0; c < spec.n_components; ++c) {
    acc += spec.weights[c];
    cumulative[c] = acc;
  }
  PointCloud cloud(p, spec.d);
  const RngStream root = RngStream::from_seed(spec.seed);
  const RngStream mix = root.child("mix");
  const RngStream gauss = root.child("gauss");
  for (std::size_t i = 0; i < p; ++i) {
    const double u = mix.child(i).next_uniform();
    std::size_t c = spec.n_components - 1;
    for (std::size_t j = 0; j < spec.n_components; ++j) {
      if (u < cumulative[j]) {
        c = j;
        break;
      }
    }
    RngStream g = gauss.child(i);
    for (std::size_t j = 0; j < spec.d; ++j) {
      cloud.at(i, j) = spec.means[c * spec.d + j] +
                       std::sqrt(spec.variances[c * spec.d + j]) * g.next_gaussian();
    }
  }
  return cloud;
}

/// Random mixture with well-separated centroids: means are drawn uniformly in
/// a box and redrawn until every pair is at least min_separation mean
/// component standard deviations apart.
inline GmmSpec random_gmm_spec(std::size_t d, std::size_t n_components,
                               double min_separation, std::uint64_t seed) {
  if (d < 1 || n_components < 1) {
    throw DataError("random_gmm_spec: need d >= 1 and n_components >= 1");
  }
  if (!(min_separation >= 0.0)) {
    throw DataError("random_gmm_spec: min_separation must be nonnegative");
  }
  GmmSpec spec;
  spec.n_components = n_components;
  spec.d = d;
  spec.seed = seed;
  const RngStream root = RngStream::from_seed(seed);

  RngStream var_stream = root.child("variances");
  spec.variances.resize(n_components * d);
  double std_sum = 0.0;
  for (auto& v : spec.variances) {
    v = 0.5 + var_stream.next_uniform();  // in [0.5, 1.5)
    std_sum += std::sqrt(v);
  }
  const double mean_std = std_sum / static_cast<double>(spec.variances.size());

  RngStream weight_stream = root.child("weights");
  spec.weights.resize(n_components);
  double weight_sum = 0.0;
  for (auto& w : spec.weights) {
    w = 0.5 + weight_stream.next_uniform();
    weight_sum += w;
  }
  for (auto& w : spec.weights) w /= weight_sum;

  const double separation = min_separation * mean_std;
  const double half_box = std::max(
      separation * std::pow(static_cast<double>(n_components), 1.0 / d), 1.0);
  RngStream mean_stream = root.child("means");
  spec.means.resize(n_components * d);
  for (std::size_t c = 0; c < n_components; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      for (std::size_t j = 0; j < d; ++j) {
        spec.means[c * d + j] = (2.0 * mean_stream.next_uniform() - 1.0) * half_box;
      }
      placed = true;
      for (std::size_t o = 0; o < c && placed; ++o) {
        double dist_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = spec.means[c * d + j] - spec.means[o * d + j];
          dist_sq += diff * diff;
        }
        placed = dist_sq >= separation * separation;
      }
    }
    if (!placed) {
      throw NumericalError("random_gmm_spec: could not place component " +
                           std::to_string(c) + " with requested separation");
    }
  }
  spec.validate();
  return spec;
}

/// Standard Gaussian cloud (the default source distribution), one substream
/// per particle.
inline PointCloud gaussian_cloud(std::size_t n, std::size_t d, RngStream stream) {
  if (n < 1 || d < 1) throw DataError("gaussian_cloud: need n >= 1 and d >= 1");
  PointCloud cloud(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream g = stream.child(i);
    for (std::size_t j = 0; j < d; ++j) cloud.at(i, j) = g.next_gaussian();
  }
  return cloud;
}

enum class MatrixFormat { Swmx, Csv };

inline MatrixFormat matrix_format_from_path(const std::string& path) {
  const auto pos = path.rfind('.');
  if (pos != std::string::npos && path.substr(pos) == ".csv") {
    return MatrixFormat::Csv;
  }
  return MatrixFormat::Swmx;
}

// Matrix file, little-endian: magic "SWMX", u32 version, u32 n, u32 d,
// n x d f64 row-major.
inline void save_matrix(const PointCloud& cloud, const std::string& path,
                        MatrixFormat format) {
  if (cloud.n == 0 || cloud.d == 0) throw DataError("save_matrix: empty cloud");
  if (format == MatrixFormat::Swmx) {
    io::BinaryWriter out(path);
    out.magic("SWMX");
    out.u32(1);
    out.u32(static_cast<std::uint32_t>(cloud.n));
    out.u32(static_cast<std::uint32_t>(cloud.d));
    out.f64_array(cloud.values);
    out.close();
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  char buf[32];
  for (std::size_t i = 0; i < cloud.n; ++i) {
    for (std::size_t j = 0; j < cloud.d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", cloud.at(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  out.close();
  if (!out) throw DataError("write failed: " + path);
}

inline PointCloud load_matrix(const std::string& path, MatrixFormat format) {
  PointCloud cloud;
  if (format == MatrixFormat::Swmx) {
    io::BinaryReader in(path);
    in.magic("SWMX");
    in.expect_version(in.u32(), 1);
    cloud.n = in.u32();
    cloud.d = in.u32();
    if (cloud.n == 0 || cloud.d == 0) in.fail("empty matrix", 8);
    cloud.values = in.f64_array(cloud.n * cloud.d);
  } else {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open for reading: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::size_t cols = 0;
      std::size_t start = 0;
      while (start <= line.size()) {
        auto end = line.find(',', start);
        if (end == std::string::npos) end = line.size();
        const std::string field = line.substr(start, end - start);
        char* parse_end = nullptr;
        const double v = std::strtod(field.c_str(), &parse_end);
        if (parse_end == field.c_str() || *parse_end != '\0') {
          throw DataError(path + ": bad CSV field '" + field + "' at line " +
                          std::to_string(lineno));
        }
        cloud.values.push_back(v);
        ++cols;
        start = end + 1;
      }
      if (cloud.d == 0) {
        cloud.d = cols;
      } else if (cols != cloud.d) {
        throw DataError(path + ": ragged CSV row at line " + std::to_string(lineno));
      }
      ++cloud.n;
    }
    if (cloud.n == 0) throw DataError(path + ": empty CSV file");
  }
  for (std::size_t i = 0; i < cloud.n; ++i) {
    for (double v : cloud.row(i)) {
      if (!std::isfinite(v)) {
        throw DataError(path + ": non-finite entry at point " + std::to_string(i));
      }
    }
  }
  return cloud;
}

}  // namespace swflow
