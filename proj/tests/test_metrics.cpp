#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "swflow/data.hpp"
#include "swflow/metrics.hpp"

using swflow::DirectionSet;
using swflow::PointCloud;
using swflow::RngStream;

namespace {

PointCloud shifted(const PointCloud& cloud, const std::vector<double>& delta) {
  PointCloud out = cloud;
  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < out.d; ++j) out.at(i, j) += delta[j];
  }
  return out;
}

DirectionSet equispaced_circle(std::size_t count) {
  DirectionSet dirs;
  dirs.n_theta = count;
  dirs.d = 2;
  dirs.values.resize(2 * count);
  for (std::size_t i = 0; i < count; ++i) {
    const double phi = (static_cast<double>(i) + 0.5) * 2.0 * std::numbers::pi /
                       static_cast<double>(count);
    dirs.values[2 * i] = std::cos(phi);
    dirs.values[2 * i + 1] = std::sin(phi);
  }
  return dirs;
}

double slope_of_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("identical clouds have zero distance", "[metrics]") {
  const auto cloud = swflow::gaussian_cloud(200, 3, RngStream::from_seed(1).child("c"));
  const auto dirs = swflow::sample_directions(3, 20, 2);
  REQUIRE(swflow::sw2_estimate(cloud, cloud, dirs, 32) < 1e-12);
}

TEST_CASE("a 1D shift is measured exactly", "[metrics]") {
  const auto a = swflow::gaussian_cloud(500, 1, RngStream::from_seed(3).child("a"));
  const auto b = shifted(a, {0.7});
  DirectionSet plus;
  plus.n_theta = 1;
  plus.d = 1;
  plus.values = {1.0};
  REQUIRE(swflow::sw2_estimate(a, b, plus, 100) == Catch::Approx(0.7).margin(1e-6));
}

TEST_CASE("estimate agrees with a dense-angle reference", "[metrics]") {
  const auto a = swflow::gaussian_cloud(400, 2, RngStream::from_seed(4).child("a"));
  const auto b = shifted(a, {2.0, 0.0});
  const auto reference = swflow::sw2_estimate(a, b, equispaced_circle(10000), 100);
  const auto dirs = swflow::sample_directions(2, 2000, 5);
  const auto estimate = swflow::sw2_estimate(a, b, dirs, 100);
  REQUIRE(std::abs(estimate - reference) <= 0.1 * reference);
  // Pure shift: the reference is ||c|| * mean|cos| = 2 * 2/pi.
  REQUIRE(reference == Catch::Approx(4.0 / std::numbers::pi).epsilon(0.02));
}

TEST_CASE("metric axioms hold under a shared direction set", "[metrics]") {
  RngStream root = RngStream::from_seed(6);
  const auto dirs = swflow::sample_directions(3, 16, 7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = swflow::gaussian_cloud(40, 3, root.child(3 * rep));
    auto b = swflow::gaussian_cloud(50, 3, root.child(3 * rep + 1));
    auto c = swflow::gaussian_cloud(60, 3, root.child(3 * rep + 2));
    for (auto& v : b.values) v = 2.0 * v + 0.5;
    for (auto& v : c.values) v = 0.5 * v - 1.0;
    const double ab = swflow::sw2_estimate(a, b, dirs, 32);
    const double ba = swflow::sw2_estimate(b, a, dirs, 32);
    const double ac = swflow::sw2_estimate(a, c, dirs, 32);
    const double bc = swflow::sw2_estimate(b, c, dirs, 32);
    REQUIRE(ab == ba);
    REQUIRE(ac <= ab + bc + 1e-10);
    REQUIRE(swflow::sw2_estimate(a, a, dirs, 32) < 1e-12);
  }
}

TEST_CASE("larger displacements give larger estimates", "[metrics]") {
  const auto a = swflow::gaussian_cloud(300, 2, RngStream::from_seed(8).child("a"));
  const auto dirs = swflow::sample_directions(2, 64, 9);
  double previous = 0.0;
  for (const double s : {1.0, 2.0, 4.0}) {
    const double est = swflow::sw2_estimate(a, shifted(a, {s, 0.0}), dirs, 50);
    REQUIRE(est > previous);
    previous = est;
  }
}

TEST_CASE("estimator variance decays like one over n_theta", "[metrics]") {
  const auto a = swflow::gaussian_cloud(200, 2, RngStream::from_seed(10).child("a"));
  auto b = swflow::gaussian_cloud(200, 2, RngStream::from_seed(10).child("b"));
  for (std::size_t i = 0; i < b.n; ++i) {
    b.at(i, 0) = 0.6 * b.at(i, 0) + 1.0;
    b.at(i, 1) = 1.4 * b.at(i, 1) - 0.5;
  }
  const std::vector<double> n_thetas{8, 64, 512};
  std::vector<double> variances;
  RngStream seeds = RngStream::from_seed(11).child("seeds");
  const int reps = 100;
  for (const double nt : n_thetas) {
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      const auto dirs = swflow::sample_directions(
          2, static_cast<std::size_t>(nt), seeds.next_u64());
      const double est = swflow::sw2_estimate(a, b, dirs, 40);
      sum += est;
      sum_sq += est * est;
    }
    const double mean = sum / reps;
    variances.push_back(sum_sq / reps - mean * mean);
  }
  const double slope = slope_of_loglog(n_thetas, variances);
  REQUIRE(slope > -1.25);
  REQUIRE(slope < -0.75);
}

TEST_CASE("clouds of different sizes share the level grid", "[metrics]") {
  const auto a = swflow::gaussian_cloud(300, 2, RngStream::from_seed(12).child("a"));
  const auto b = swflow::gaussian_cloud(451, 2, RngStream::from_seed(12).child("b"));
  const auto dirs = swflow::sample_directions(2, 32, 13);
  const double d = swflow::sw2_estimate(a, b, dirs, 64);
  REQUIRE(d < 0.5);  // both standard Gaussian, so only sampling noise remains
}

TEST_CASE("sketch-based monitoring equals the direct estimate", "[metrics]") {
  const auto data = swflow::gaussian_cloud(500, 2, RngStream::from_seed(14).child("d"));
  auto cloud = swflow::gaussian_cloud(120, 2, RngStream::from_seed(14).child("c"));
  for (auto& v : cloud.values) v += 0.8;
  const auto dirs = swflow::sample_directions(2, 24, 15);
  const auto sketch = swflow::build_sketch(data, dirs, 48);
  const auto via_sketch = swflow::sw2_to_sketch(cloud, sketch);
  const auto direct = swflow::sw2_estimate_detailed(cloud, data, dirs, 48);
  REQUIRE(via_sketch.mean == direct.mean);
  REQUIRE(via_sketch.standard_error == direct.standard_error);
}

TEST_CASE("dimension mismatches are rejected", "[metrics]") {
  const auto a = swflow::gaussian_cloud(10, 2, RngStream::from_seed(16).child("a"));
  const auto b = swflow::gaussian_cloud(10, 3, RngStream::from_seed(16).child("b"));
  const auto dirs = swflow::sample_directions(2, 4, 17);
  REQUIRE_THROWS_AS(swflow::sw2_estimate(a, b, dirs, 16), swflow::DataError);
}
