#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "swflow/data.hpp"
#include "swflow/sketch.hpp"

using swflow::DirectionSet;
using swflow::PointCloud;
using swflow::RngStream;
using swflow::TargetSketch;

namespace {

PointCloud random_cloud(std::uint64_t seed, std::size_t n, std::size_t d) {
  return swflow::gaussian_cloud(n, d, RngStream::from_seed(seed).child("cloud"));
}

DirectionSet axis_direction_1d(double sign) {
  DirectionSet dirs;
  dirs.n_theta = 1;
  dirs.d = 1;
  dirs.values = {sign};
  return dirs;
}

bool sketches_equal(const TargetSketch& a, const TargetSketch& b) {
  if (a.q != b.q || a.source_fingerprint != b.source_fingerprint) return false;
  if (a.directions.values != b.directions.values) return false;
  if (a.tables.size() != b.tables.size()) return false;
  for (std::size_t n = 0; n < a.tables.size(); ++n) {
    if (a.tables[n].values != b.tables[n].values) return false;
  }
  return true;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("identical points give constant tables", "[sketch]") {
  PointCloud cloud(4, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    cloud.at(i, 0) = 1.0;
    cloud.at(i, 1) = -2.0;
    cloud.at(i, 2) = 0.5;
  }
  const auto dirs = swflow::sample_directions(3, 5, 7);
  const auto sketch = swflow::build_sketch(cloud, dirs, 8);
  for (const auto& table : sketch.tables) {
    for (double v : table.values) REQUIRE(v == table.values.front());
  }
}

TEST_CASE("1D grid sketch reproduces uniform quantiles", "[sketch]") {
  PointCloud grid(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) grid.at(i, 0) = static_cast<double>(i);
  const auto sketch = swflow::build_sketch(grid, axis_direction_1d(1.0), 100);
  REQUIRE(sketch.tables.size() == 1);
  const auto& table = sketch.tables[0];
  for (std::size_t j = 0; j < table.size(); ++j) {
    REQUIRE(std::abs(table.values[j] - 999.0 * table.level(j)) < 1.0);
  }
}

TEST_CASE("a full-size batch equals no batch bit-for-bit", "[sketch]") {
  const auto cloud = random_cloud(1, 200, 2);
  const auto dirs = swflow::sample_directions(2, 6, 2);
  const auto plain = swflow::build_sketch(cloud, dirs, 32, std::nullopt, 5);
  const auto batched = swflow::build_sketch(cloud, dirs, 32, cloud.n, 5);
  REQUIRE(sketches_equal(plain, batched));
}

TEST_CASE("mini-batched sketches are deterministic and in range", "[sketch]") {
  const auto cloud = random_cloud(2, 500, 2);
  const auto dirs = swflow::sample_directions(2, 4, 3);
  const auto a = swflow::build_sketch(cloud, dirs, 16, 100, 11);
  const auto b = swflow::build_sketch(cloud, dirs, 16, 100, 11);
  REQUIRE(sketches_equal(a, b));
  const auto c = swflow::build_sketch(cloud, dirs, 16, 100, 12);
  REQUIRE_FALSE(sketches_equal(a, c));

  REQUIRE_THROWS_AS(swflow::build_sketch(cloud, dirs, 16, cloud.n + 1, 11),
                    swflow::DataError);
}

TEST_CASE("permuting directions permutes tables", "[sketch]") {
  const auto cloud = random_cloud(3, 300, 2);
  auto dirs = swflow::sample_directions(2, 2, 4);
  DirectionSet swapped = dirs;
  for (std::size_t j = 0; j < 2; ++j) {
    std::swap(swapped.values[j], swapped.values[2 + j]);
  }
  const auto a = swflow::build_sketch(cloud, dirs, 16, 64, 9);
  const auto b = swflow::build_sketch(cloud, swapped, 16, 64, 9);
  REQUIRE(a.tables[0].values == b.tables[1].values);
  REQUIRE(a.tables[1].values == b.tables[0].values);
}

TEST_CASE("sketch build validates input", "[sketch]") {
  const auto dirs = swflow::sample_directions(2, 3, 1);
  PointCloud one(1, 2);
  REQUIRE_THROWS_AS(swflow::build_sketch(one, dirs, 8), swflow::DataError);
  PointCloud wrong_dim(10, 3);
  REQUIRE_THROWS_AS(swflow::build_sketch(wrong_dim, dirs, 8), swflow::DataError);
  const auto cloud = random_cloud(4, 10, 2);
  REQUIRE_THROWS_AS(swflow::build_sketch(cloud, dirs, 1), swflow::DataError);
}

TEST_CASE("sketch files round-trip exactly", "[sketch]") {
  const auto cloud = random_cloud(5, 120, 3);
  const auto dirs = swflow::sample_directions(3, 7, 6);
  const auto sketch = swflow::build_sketch(cloud, dirs, 24, 60, 13);
  const auto path = temp_path("swflow_test_sketch.swsk");
  swflow::save_sketch(sketch, path);
  const auto loaded = swflow::load_sketch(path);
  REQUIRE(sketches_equal(sketch, loaded));
  REQUIRE(loaded.directions.seed == sketch.directions.seed);
  std::filesystem::remove(path);
}

TEST_CASE("sketch loading reports corruption with an offset", "[sketch]") {
  const auto cloud = random_cloud(6, 50, 2);
  const auto dirs = swflow::sample_directions(2, 2, 7);
  const auto sketch = swflow::build_sketch(cloud, dirs, 8);
  const auto path = temp_path("swflow_test_corrupt.swsk");
  swflow::save_sketch(sketch, path);

  SECTION("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
    f.close();
    try {
      swflow::load_sketch(path);
      FAIL("expected DataError");
    } catch (const swflow::DataError& e) {
      REQUIRE(std::string(e.what()).find("offset 0") != std::string::npos);
    }
  }

  SECTION("truncation") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
    try {
      swflow::load_sketch(path);
      FAIL("expected DataError");
    } catch (const swflow::DataError& e) {
      REQUIRE(std::string(e.what()).find("offset") != std::string::npos);
      REQUIRE(std::string(e.what()).find("truncated") != std::string::npos);
    }
  }

  std::filesystem::remove(path);
}

TEST_CASE("single-shard merge equals a direct build", "[sketch]") {
  const auto cloud = random_cloud(7, 90, 2);
  const auto dirs = swflow::sample_directions(2, 5, 8);
  const auto direct = swflow::build_sketch(cloud, dirs, 16);
  const auto shard = swflow::make_projection_shard(cloud, dirs);
  const std::vector<swflow::ProjectionShard> shards{shard};
  const auto merged = swflow::merge_shard_sketches(dirs, shards, 16);
  REQUIRE(sketches_equal(direct, merged));
}

TEST_CASE("a partitioned merge equals the monolithic sketch bit-for-bit", "[sketch]") {
  const auto cloud = random_cloud(8, 257, 3);
  const auto dirs = swflow::sample_directions(3, 6, 9);

  PointCloud first(130, 3), second(127, 3);
  for (std::size_t i = 0; i < first.n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) first.at(i, j) = cloud.at(i, j);
  }
  for (std::size_t i = 0; i < second.n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) second.at(i, j) = cloud.at(first.n + i, j);
  }
  const std::vector<swflow::ProjectionShard> shards{
      swflow::make_projection_shard(first, dirs),
      swflow::make_projection_shard(second, dirs)};
  const auto merged = swflow::merge_shard_sketches(dirs, shards, 32);
  const auto direct = swflow::build_sketch(cloud, dirs, 32);
  REQUIRE(sketches_equal(direct, merged));
}

TEST_CASE("merge validates shards", "[sketch]") {
  const auto dirs = swflow::sample_directions(2, 3, 10);
  REQUIRE_THROWS_AS(swflow::merge_shard_sketches(dirs, {}, 8), swflow::DataError);

  const auto cloud = random_cloud(9, 40, 2);
  const auto other_dirs = swflow::sample_directions(2, 3, 11);
  const std::vector<swflow::ProjectionShard> shards{
      swflow::make_projection_shard(cloud, other_dirs)};
  REQUIRE_THROWS_AS(swflow::merge_shard_sketches(dirs, shards, 8), swflow::DataError);
}
