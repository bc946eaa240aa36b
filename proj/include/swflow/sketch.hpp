#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/geometry.hpp"
#include "swflow/io.hpp"
#include "swflow/ot1d.hpp"
#include "swflow/parallel.hpp"
#include "swflow/rng.hpp"

namespace swflow {

/// Per-direction quantile tables of the projected target data: the only
/// representation of the dataset a flow ever reads. The fingerprint hashes
/// the sorted projections the tables were built from, so shard-merged and
/// monolithic builds of the same data agree exactly.
struct TargetSketch {
  DirectionSet directions;
  std::size_t q = 0;
  std::vector<QuantileTable> tables;
  std::uint64_t source_fingerprint = 0;

  std::size_t dimension() const { return directions.d; }
  std::size_t n_theta() const { return directions.n_theta; }
};

namespace detail {

inline std::uint64_t hash_sorted_projection(std::span<const double> sorted) {
  std::uint64_t h = fnv1a_init();
  h = fnv1a_u64(h, sorted.size());
  for (double v : sorted) h = fnv1a_f64(h, v);
  return h;
}

inline std::uint64_t combine_sketch_fingerprint(
    const DirectionSet& dirs, std::size_t q, std::size_t batch,
    std::uint64_t batch_seed, std::span<const std::uint64_t> direction_hashes) {
  std::uint64_t h = fnv1a_init();
  h = fnv1a_u64(h, dirs.fingerprint());
  h = fnv1a_u64(h, q);
  h = fnv1a_u64(h, batch);
  if (batch != 0) h = fnv1a_u64(h, batch_seed);
  for (std::uint64_t dh : direction_hashes) h = fnv1a_u64(h, dh);
  return h;
}

inline std::uint64_t direction_content_key(std::span<const double> theta) {
  std::uint64_t h = fnv1a_init();
  for (double v : theta) h = fnv1a_f64(h, v);
  return h;
}

}  // namespace detail

/// Builds the target sketch: one quantile table per direction. With `batch`
/// set, each direction summarizes its own uniformly drawn subset (without
/// replacement) instead of the full dataset; a full-size batch is the same
/// thing as no batch and is normalized away. Mini-batch draws are keyed by
/// direction content, so reordering directions only reorders the tables.
inline TargetSketch build_sketch(const PointCloud& data, const DirectionSet& dirs,
                                 std::size_t q,
                                 std::optional<std::size_t> batch = std::nullopt,
                                 std::uint64_t seed = 0) {
  if (data.n < 2) throw DataError("build_sketch: need at least 2 data points");
  if (q < 2) throw DataError("build_sketch: quantile count must be >= 2");
  if (dirs.d != data.d) {
    throw DataError("build_sketch: direction dimension " + std::to_string(dirs.d) +
                    " does not match data dimension " + std::to_string(data.d));
  }
  if (batch) {
    if (*batch > data.n) {
      throw DataError("build_sketch: batch " + std::to_string(*batch) +
                      " exceeds dataset size " + std::to_string(data.n));
    }
    if (*batch == 0) throw DataError("build_sketch: batch must be positive");
    if (*batch == data.n) batch.reset();
  }
  require_finite(data, "build_sketch");

  TargetSketch sketch;
  sketch.directions = dirs;
  sketch.q = q;
  sketch.tables.resize(dirs.n_theta);
  std::vector<std::uint64_t> hashes(dirs.n_theta);

  const RngStream batch_root = RngStream::from_seed(seed).child("batch");
  par::parallel_for(dirs.n_theta, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const auto theta = dirs.row(n);
      std::vector<double> proj;
      if (batch) {
        const auto indices = sample_without_replacement(
            data.n, *batch, batch_root.child(detail::direction_content_key(theta)));
        proj.resize(*batch);
        for (std::size_t i = 0; i < *batch; ++i) {
          proj[i] = dot(data.row(indices[i]), theta);
        }
      } else {
        proj = project(data, theta);
      }
      std::sort(proj.begin(), proj.end());
      hashes[n] = detail::hash_sorted_projection(proj);
      sketch.tables[n] = detail::table_from_sorted(proj, q);
    }
  });

  sketch.source_fingerprint = detail::combine_sketch_fingerprint(
      dirs, q, batch.value_or(0), seed, hashes);
  return sketch;
}

/// One shard's contribution to a distributed sketch build: the sorted
/// projections of its slice of the data, per direction.
struct ProjectionShard {
  std::uint64_t direction_fingerprint = 0;
  std::vector<std::vector<double>> sorted_projections;
};

inline ProjectionShard make_projection_shard(const PointCloud& data,
                                             const DirectionSet& dirs) {
  if (data.n == 0) throw DataError("make_projection_shard: empty shard data");
  if (dirs.d != data.d) {
    throw DataError("make_projection_shard: dimension mismatch");
  }
  require_finite(data, "make_projection_shard");
  ProjectionShard shard;
  shard.direction_fingerprint = dirs.fingerprint();
  shard.sorted_projections.resize(dirs.n_theta);
  par::parallel_for(dirs.n_theta, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto proj = project(data, dirs.row(n));
      std::sort(proj.begin(), proj.end());
      shard.sorted_projections[n] = std::move(proj);
    }
  });
  return shard;
}

/// Merges per-shard sorted projections into the sketch the whole dataset
/// would have produced: merged order statistics equal global order
/// statistics, so the result matches a monolithic build bit-for-bit.
inline TargetSketch merge_shard_sketches(const DirectionSet& dirs,
                                         std::span<const ProjectionShard> shards,
                                         std::size_t q) {
  if (shards.empty()) throw DataError("merge_shard_sketches: no shards");
  if (q < 2) throw DataError("merge_shard_sketches: quantile count must be >= 2");
  const std::uint64_t expected = dirs.fingerprint();
  for (std::size_t s = 0; s < shards.size(); ++s) {
    if (shards[s].direction_fingerprint != expected) {
      throw DataError("merge_shard_sketches: direction-set fingerprint mismatch "
                      "at shard " + std::to_string(s));
    }
    if (shards[s].sorted_projections.size() != dirs.n_theta) {
      throw DataError("merge_shard_sketches: shard " + std::to_string(s) +
                      " has wrong direction count");
    }
  }

  TargetSketch sketch;
  sketch.directions = dirs;
  sketch.q = q;
  sketch.tables.resize(dirs.n_theta);
  std::vector<std::uint64_t> hashes(dirs.n_theta);

  par::parallel_for(dirs.n_theta, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      std::vector<double> merged;
      for (const auto& shard : shards) {
        const auto& run = shard.sorted_projections[n];
        if (!std::is_sorted(run.begin(), run.end())) {
          throw DataError("merge_shard_sketches: shard projections not sorted "
                          "for direction " + std::to_string(n));
        }
        std::vector<double> next;
        next.reserve(merged.size() + run.size());
        std::merge(merged.begin(), merged.end(), run.begin(), run.end(),
                   std::back_inserter(next));
        merged = std::move(next);
      }
      if (merged.empty()) {
        throw DataError("merge_shard_sketches: no samples for direction " +
                        std::to_string(n));
      }
      hashes[n] = detail::hash_sorted_projection(merged);
      sketch.tables[n] = detail::table_from_sorted(merged, q);
    }
  });

  sketch.source_fingerprint =
      detail::combine_sketch_fingerprint(dirs, q, 0, 0, hashes);
  return sketch;
}

// Sketch file, little-endian: magic "SWSK", u32 version, u32 d, u32 n_theta,
// u32 q, u64 seed, u64 source_fingerprint, n_theta unit vectors (d x f64),
// n_theta tables (q x f64 values; levels implicit from the (j+0.5)/Q grid).
inline void save_sketch(const TargetSketch& sketch, const std::string& path) {
  io::BinaryWriter out(path);
  out.magic("SWSK");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(sketch.directions.d));
  out.u32(static_cast<std::uint32_t>(sketch.directions.n_theta));
  out.u32(static_cast<std::uint32_t>(sketch.q));
  out.u64(sketch.directions.seed);
  out.u64(sketch.source_fingerprint);
  out.f64_array(sketch.directions.values);
  for (const auto& table : sketch.tables) out.f64_array(table.values);
  out.close();
}

inline TargetSketch load_sketch(const std::string& path) {
  io::BinaryReader in(path);
  in.magic("SWSK");
  in.expect_version(in.u32(), 1);
  TargetSketch sketch;
  sketch.directions.d = in.u32();
  sketch.directions.n_theta = in.u32();
  sketch.q = in.u32();
  sketch.directions.seed = in.u64();
  sketch.source_fingerprint = in.u64();
  if (sketch.directions.d == 0 || sketch.directions.n_theta == 0 || sketch.q < 2) {
    in.fail("invalid sketch header", 8);
  }
  sketch.directions.values =
      in.f64_array(sketch.directions.n_theta * sketch.directions.d);
  sketch.tables.resize(sketch.directions.n_theta);
  for (auto& table : sketch.tables) {
    const std::uint64_t at = in.offset();
    table.values = in.f64_array(sketch.q);
    try {
      table.validate();
    } catch (const DataError& e) {
      in.fail(e.what(), at);
    }
  }
  return sketch;
}

}  // namespace swflow
