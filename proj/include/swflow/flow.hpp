#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/geometry.hpp"
#include "swflow/io.hpp"
#include "swflow/metrics.hpp"
#include "swflow/ot1d.hpp"
#include "swflow/parallel.hpp"
#include "swflow/rng.hpp"
#include "swflow/sketch.hpp"

namespace swflow {

inline constexpr std::size_t kMonitorDirections = 200;
inline constexpr std::size_t kEarlyStopWindow = 10;
inline constexpr double kEarlyStopRelTol = 1e-4;

struct FlowConfig {
  std::size_t n_particles = 5000;
  std::size_t n_theta = 30;
  double step_size = 1.0;
  double lambda = 1e-4;
  std::size_t iterations = 200;
  std::size_t quantiles = 100;
  std::uint64_t seed = 0;
  DirectionMode direction_mode = DirectionMode::Fixed;
  bool record_maps = false;
  bool early_stop = false;

  void validate() const {
    if (n_particles < 1) throw DataError("FlowConfig: need at least one particle");
    if (n_theta < 1) throw DataError("FlowConfig: need at least one direction");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) {
      throw DataError("FlowConfig: step size must be positive and finite");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw DataError("FlowConfig: lambda must be nonnegative and finite");
    }
    if (quantiles < 2) throw DataError("FlowConfig: need at least 2 quantiles");
  }
};

/// Per-iteration particle quantile tables recorded during training, plus
/// everything needed to re-drive the same updates on unseen particles.
struct TransportMapRecord {
  FlowConfig config;
  DirectionSet directions;  // the sketch's direction pool
  std::vector<std::vector<QuantileTable>> frames;
};

struct FlowLogEntry {
  double sw2 = 0.0;
  double sw2_standard_error = 0.0;
  double wall_ms = 0.0;
};

/// entries[k] monitors the particle state after k updates; entry k < K also
/// carries the wall time of the step that left state k.
struct FlowLog {
  std::vector<FlowLogEntry> entries;
};

struct FlowResult {
  PointCloud cloud;
  std::optional<TransportMapRecord> record;
  FlowLog log;
};

/// Streaming consumer for recorded frames (keeps long runs off the heap).
class TransportMapSink {
public:
  virtual ~TransportMapSink() = default;
  virtual void on_frame(std::size_t iteration,
                        const std::vector<QuantileTable>& tables) = 0;
};

namespace detail {

// Direction indices (into the sketch pool) used by training step k. Fixed
// mode draws one subset up front; resampled mode draws a fresh one per
// iteration. Whole-pool use short-circuits to the identity so the default
// configuration stays exactly reproducible over pool reorderings.
inline std::vector<std::size_t> training_subset(const FlowConfig& cfg,
                                                std::size_t pool,
                                                std::size_t iteration) {
  if (cfg.n_theta > pool) {
    throw DataError("flow: config uses " + std::to_string(cfg.n_theta) +
                    " directions but the sketch holds " + std::to_string(pool));
  }
  std::vector<std::size_t> subset(cfg.n_theta);
  if (cfg.n_theta == pool && cfg.direction_mode == DirectionMode::Fixed) {
    for (std::size_t m = 0; m < pool; ++m) subset[m] = m;
    return subset;
  }
  RngStream stream = RngStream::from_seed(cfg.seed).child("train-directions");
  if (cfg.direction_mode == DirectionMode::Resampled) {
    stream = stream.child(iteration);
  }
  const auto picks = sample_without_replacement(pool, cfg.n_theta, stream);
  for (std::size_t m = 0; m < cfg.n_theta; ++m) subset[m] = picks[m];
  return subset;
}

inline std::vector<std::size_t> monitor_subset(const FlowConfig& cfg,
                                               std::size_t pool) {
  const std::size_t count = std::min(kMonitorDirections, pool);
  if (count == pool) {
    std::vector<std::size_t> subset(pool);
    for (std::size_t m = 0; m < pool; ++m) subset[m] = m;
    return subset;
  }
  const auto picks = sample_without_replacement(
      pool, count, RngStream::from_seed(cfg.seed).child("monitor"));
  return {picks.begin(), picks.end()};
}

inline std::vector<QuantileTable> build_particle_tables(
    const PointCloud& cloud, const DirectionSet& dirs,
    std::span<const std::size_t> subset, std::size_t q) {
  std::vector<QuantileTable> tables(subset.size());
  par::parallel_for(subset.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      auto proj = project(cloud, dirs.row(subset[m]));
      std::sort(proj.begin(), proj.end());
      tables[m] = table_from_sorted(proj, q);
    }
  });
  return tables;
}

inline void drift_into(std::span<const double> x, const DirectionSet& dirs,
                       std::span<const std::size_t> subset,
                       std::span<const QuantileTable> particle_tables,
                       std::span<const QuantileTable> target_tables,
                       std::span<double> out) {
  for (double& v : out) v = 0.0;
  for (std::size_t m = 0; m < subset.size(); ++m) {
    const auto theta = dirs.row(subset[m]);
    const double z = dot(x, theta);
    const double psi =
        potential_derivative(z, particle_tables[m], target_tables[subset[m]]);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += psi * theta[j];
  }
  const auto scale = -1.0 / static_cast<double>(subset.size());
  for (double& v : out) v *= scale;
}

// One Euler-Maruyama update: x' = x + h * drift + sqrt(2*lambda*h) * z, with
// the Gaussian z drawn from a per-particle substream so that the noise a
// particle sees does not depend on how many particles exist.
inline PointCloud apply_update(const PointCloud& cloud, const DirectionSet& dirs,
                               std::span<const std::size_t> subset,
                               std::span<const QuantileTable> particle_tables,
                               std::span<const QuantileTable> target_tables,
                               double h, double lambda, RngStream noise_root) {
  PointCloud next(cloud.n, cloud.d);
  next.generation = cloud.generation + 1;
  const double noise_scale = std::sqrt(2.0 * lambda * h);
  par::parallel_for(cloud.n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> drift(cloud.d);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = cloud.row(i);
      drift_into(x, dirs, subset, particle_tables, target_tables, drift);
      auto out = next.row(i);
      RngStream noise = noise_root.child(i);
      bool finite = true;
      for (std::size_t j = 0; j < cloud.d; ++j) {
        double v = x[j] + h * drift[j];
        if (noise_scale > 0.0) v += noise_scale * noise.next_gaussian();
        out[j] = v;
        finite = finite && std::isfinite(v);
      }
      if (!finite) {
        throw NumericalError("euler_step: non-finite particle " +
                             std::to_string(i) + " after step " +
                             std::to_string(cloud.generation));
      }
    }
  });
  return next;
}

}  // namespace detail

/// The sketch-direction indices a flow run with this config monitors against.
/// Replays must evaluate their final distance on the same subset to be
/// comparable with the training log.
inline std::vector<std::size_t> monitor_directions(const FlowConfig& cfg,
                                                   std::size_t pool) {
  return detail::monitor_subset(cfg, pool);
}

/// Monte-Carlo drift estimate at one point, using every sketch direction:
/// minus the direction-average of the projected potential derivatives.
inline std::vector<double> drift(std::span<const double> x,
                                 std::span<const QuantileTable> particle_tables,
                                 const TargetSketch& sketch) {
  if (x.size() != sketch.dimension()) {
    throw DataError("drift: point dimension does not match sketch");
  }
  if (particle_tables.size() != sketch.tables.size()) {
    throw DataError("drift: got " + std::to_string(particle_tables.size()) +
                    " particle tables for " + std::to_string(sketch.tables.size()) +
                    " sketch directions");
  }
  std::vector<std::size_t> subset(sketch.n_theta());
  for (std::size_t m = 0; m < subset.size(); ++m) subset[m] = m;
  std::vector<double> out(x.size());
  detail::drift_into(x, sketch.directions, subset, particle_tables, sketch.tables,
                     out);
  return out;
}

struct StepResult {
  PointCloud cloud;
  std::vector<QuantileTable> particle_tables;
};

/// One training step from the cloud's current generation: rebuilds the
/// per-direction particle tables, then updates every particle. The noise
/// stream is the per-iteration stream, e.g. root.child("noise").child(k).
inline StepResult euler_step(const PointCloud& cloud, const TargetSketch& sketch,
                             const FlowConfig& cfg, RngStream noise_stream) {
  cfg.validate();
  if (cloud.n == 0) throw DataError("euler_step: empty cloud");
  if (cloud.d != sketch.dimension()) {
    throw DataError("euler_step: cloud dimension does not match sketch");
  }
  if (cfg.quantiles != sketch.q) {
    throw DataError("euler_step: config quantiles " + std::to_string(cfg.quantiles) +
                    " differ from sketch quantiles " + std::to_string(sketch.q));
  }
  const auto subset = detail::training_subset(
      cfg, sketch.n_theta(), static_cast<std::size_t>(cloud.generation));
  StepResult result;
  result.particle_tables =
      detail::build_particle_tables(cloud, sketch.directions, subset, cfg.quantiles);
  result.cloud = detail::apply_update(cloud, sketch.directions, subset,
                                      result.particle_tables, sketch.tables,
                                      cfg.step_size, cfg.lambda, noise_stream);
  return result;
}

using FlowObserver = std::function<void(std::size_t iteration, const PointCloud&)>;

/// Runs the full flow: K Euler-Maruyama steps from `init`, with per-iteration
/// monitoring against the sketch. Recorded frames go to `sink` when given,
/// otherwise into the returned in-memory record.
inline FlowResult run_flow(const PointCloud& init, const TargetSketch& sketch,
                           const FlowConfig& cfg, TransportMapSink* sink = nullptr,
                           const FlowObserver& observer = {}) {
  cfg.validate();
  if (init.d != sketch.dimension()) {
    throw DataError("run_flow: init dimension does not match sketch");
  }
  if (init.n != cfg.n_particles) {
    throw DataError("run_flow: init holds " + std::to_string(init.n) +
                    " particles but config says " + std::to_string(cfg.n_particles));
  }
  if (cfg.quantiles != sketch.q) {
    throw DataError("run_flow: config quantiles differ from sketch quantiles");
  }
  require_finite(init, "run_flow");

  const std::size_t pool = sketch.n_theta();
  const auto monitor = detail::monitor_subset(cfg, pool);
  const RngStream noise_root = RngStream::from_seed(cfg.seed).child("noise");

  FlowResult result;
  result.cloud = init;
  result.cloud.generation = 0;
  if (cfg.record_maps && sink == nullptr) {
    result.record = TransportMapRecord{cfg, sketch.directions, {}};
  }

  const auto monitor_state = [&](const std::vector<std::size_t>& subset,
                                 const std::vector<QuantileTable>& tables)
      -> FlowLogEntry {
    FlowLogEntry entry;
    Sw2Estimate est;
    if (subset == monitor) {
      std::vector<double> w2(tables.size());
      for (std::size_t m = 0; m < tables.size(); ++m) {
        w2[m] = w2_1d(tables[m], sketch.tables[subset[m]]);
      }
      est = detail::summarize_per_direction(std::move(w2));
    } else {
      est = sw2_to_sketch(result.cloud, sketch, monitor);
    }
    entry.sw2 = est.mean;
    entry.sw2_standard_error = est.standard_error;
    return entry;
  };

  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const auto subset = detail::training_subset(cfg, pool, k);
    const auto tables =
        detail::build_particle_tables(result.cloud, sketch.directions, subset,
                                      cfg.quantiles);
    auto entry = monitor_state(subset, tables);
    if (observer) observer(k, result.cloud);

    // Early stop looks at the relative drift of the monitor over a window.
    if (cfg.early_stop && k >= kEarlyStopWindow) {
      const double prev = result.log.entries[k - kEarlyStopWindow].sw2;
      if (std::abs(entry.sw2 - prev) <
          kEarlyStopRelTol * std::max(std::abs(prev), 1e-300)) {
        result.log.entries.push_back(entry);
        return result;
      }
    }

    if (cfg.record_maps) {
      if (sink != nullptr) {
        sink->on_frame(k, tables);
      } else {
        result.record->frames.push_back(tables);
      }
    }

    result.cloud = detail::apply_update(result.cloud, sketch.directions, subset,
                                        tables, sketch.tables, cfg.step_size,
                                        cfg.lambda, noise_root.child(k));
    entry.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    result.log.entries.push_back(entry);
  }

  // Monitor the final state.
  {
    const auto subset = detail::training_subset(cfg, pool, cfg.iterations);
    std::vector<QuantileTable> tables;
    if (subset == monitor) {
      tables = detail::build_particle_tables(result.cloud, sketch.directions,
                                             subset, cfg.quantiles);
    }
    result.log.entries.push_back(monitor_state(subset, tables));
    if (observer) observer(cfg.iterations, result.cloud);
  }
  return result;
}

/// Transports fresh particles through the recorded maps: the same updates,
/// but psi' is evaluated with the stored per-iteration particle tables, not
/// tables rebuilt from the fresh cloud. Noise comes from `replay_seed`; pass
/// the training seed to reproduce a training trajectory exactly.
inline PointCloud replay_flow(const PointCloud& fresh,
                              const TransportMapRecord& record,
                              const TargetSketch& sketch,
                              std::uint64_t replay_seed) {
  if (record.directions.fingerprint() != sketch.directions.fingerprint()) {
    throw DataError("replay_flow: record/sketch direction mismatch");
  }
  if (fresh.n == 0) throw DataError("replay_flow: empty cloud");
  if (fresh.d != sketch.dimension()) {
    throw DataError("replay_flow: cloud dimension does not match sketch");
  }
  if (record.config.quantiles != sketch.q) {
    throw DataError("replay_flow: record quantiles differ from sketch quantiles");
  }
  require_finite(fresh, "replay_flow");

  const std::size_t pool = sketch.n_theta();
  const RngStream noise_root = RngStream::from_seed(replay_seed).child("noise");
  PointCloud cloud = fresh;
  cloud.generation = 0;
  for (std::size_t k = 0; k < record.frames.size(); ++k) {
    const auto& tables = record.frames[k];
    if (tables.size() != record.config.n_theta) {
      throw DataError("replay_flow: frame " + std::to_string(k) +
                      " has wrong direction count");
    }
    const auto subset = detail::training_subset(record.config, pool, k);
    cloud = detail::apply_update(cloud, sketch.directions, subset, tables,
                                 sketch.tables, record.config.step_size,
                                 record.config.lambda, noise_root.child(k));
  }
  return cloud;
}

// Transport-map file, little-endian: magic "SWTM", u32 version, config block
// (u32 n_particles, u32 n_theta, u32 iterations, u32 quantiles, f64 step,
// f64 lambda, u64 seed, u8 mode, u8 reserved, u32 frame_count), direction
// block (u32 d, u32 pool, u64 seed, u8 mode, pool x d f64), then frame_count
// frames of n_theta x quantiles f64 each. Frames have a fixed size, so a
// reader can seek straight to frame k.
class TransportMapWriter final : public TransportMapSink {
public:
  TransportMapWriter(const std::string& path, const FlowConfig& cfg,
                     const DirectionSet& pool)
      : out_(path), cfg_(cfg) {
    out_.magic("SWTM");
    out_.u32(1);
    out_.u32(static_cast<std::uint32_t>(cfg.n_particles));
    out_.u32(static_cast<std::uint32_t>(cfg.n_theta));
    out_.u32(static_cast<std::uint32_t>(cfg.iterations));
    out_.u32(static_cast<std::uint32_t>(cfg.quantiles));
    out_.f64(cfg.step_size);
    out_.f64(cfg.lambda);
    out_.u64(cfg.seed);
    out_.u8(static_cast<std::uint8_t>(cfg.direction_mode));
    out_.u8(0);
    frame_count_offset_ = out_.offset();
    out_.u32(0);
    out_.u32(static_cast<std::uint32_t>(pool.d));
    out_.u32(static_cast<std::uint32_t>(pool.n_theta));
    out_.u64(pool.seed);
    out_.u8(static_cast<std::uint8_t>(pool.mode));
    out_.f64_array(pool.values);
  }

  void on_frame(std::size_t, const std::vector<QuantileTable>& tables) override {
    for (const auto& table : tables) out_.f64_array(table.values);
    ++frames_;
  }

  void close() {
    out_.patch_u32(frame_count_offset_, static_cast<std::uint32_t>(frames_));
    out_.close();
  }

private:
  io::BinaryWriter out_;
  FlowConfig cfg_;
  std::uint64_t frame_count_offset_ = 0;
  std::size_t frames_ = 0;
};

inline void save_transport_record(const TransportMapRecord& record,
                                  const std::string& path) {
  TransportMapWriter writer(path, record.config, record.directions);
  for (std::size_t k = 0; k < record.frames.size(); ++k) {
    writer.on_frame(k, record.frames[k]);
  }
  writer.close();
}

namespace detail {

// Header + directions of an SWTM file; leaves the reader at the first frame.
inline std::uint32_t read_transport_header(io::BinaryReader& in,
                                           TransportMapRecord& record) {
  in.magic("SWTM");
  in.expect_version(in.u32(), 1);
  record.config.n_particles = in.u32();
  record.config.n_theta = in.u32();
  record.config.iterations = in.u32();
  record.config.quantiles = in.u32();
  record.config.step_size = in.f64();
  record.config.lambda = in.f64();
  record.config.seed = in.u64();
  const std::uint8_t mode = in.u8();
  if (mode > 1) in.fail("invalid direction mode " + std::to_string(mode),
                        in.offset() - 1);
  record.config.direction_mode = static_cast<DirectionMode>(mode);
  in.u8();
  const std::uint32_t frame_count = in.u32();
  record.config.record_maps = true;
  record.directions.d = in.u32();
  record.directions.n_theta = in.u32();
  record.directions.seed = in.u64();
  const std::uint8_t dir_mode = in.u8();
  if (dir_mode > 1) in.fail("invalid direction mode " + std::to_string(dir_mode),
                            in.offset() - 1);
  record.directions.mode = static_cast<DirectionMode>(dir_mode);
  if (record.directions.d == 0 || record.directions.n_theta == 0 ||
      record.config.quantiles < 2 || record.config.n_theta == 0) {
    in.fail("invalid transport-map header", 8);
  }
  record.directions.values =
      in.f64_array(record.directions.n_theta * record.directions.d);
  return frame_count;
}

inline std::vector<QuantileTable> read_transport_frame(io::BinaryReader& in,
                                                       std::size_t n_theta,
                                                       std::size_t quantiles) {
  std::vector<QuantileTable> frame(n_theta);
  for (auto& table : frame) {
    const std::uint64_t at = in.offset();
    table.values = in.f64_array(quantiles);
    try {
      table.validate();
    } catch (const DataError& e) {
      in.fail(e.what(), at);
    }
  }
  return frame;
}

}  // namespace detail

inline TransportMapRecord load_transport_record(const std::string& path) {
  io::BinaryReader in(path);
  TransportMapRecord record;
  const std::uint32_t frame_count = detail::read_transport_header(in, record);
  record.frames.reserve(frame_count);
  for (std::uint32_t k = 0; k < frame_count; ++k) {
    record.frames.push_back(detail::read_transport_frame(
        in, record.config.n_theta, record.config.quantiles));
  }
  return record;
}

/// Random access into a transport-map file: frames have a fixed size, so
/// frame k is one seek away. Returns the frame's tables.
inline std::vector<QuantileTable> load_transport_frame(const std::string& path,
                                                       std::size_t k) {
  io::BinaryReader in(path);
  TransportMapRecord record;
  const std::uint32_t frame_count = detail::read_transport_header(in, record);
  if (k >= frame_count) {
    throw DataError(path + ": frame " + std::to_string(k) + " out of range (" +
                    std::to_string(frame_count) + " frames)");
  }
  const std::uint64_t frame_bytes =
      static_cast<std::uint64_t>(record.config.n_theta) *
      record.config.quantiles * sizeof(double);
  in.seek(in.offset() + k * frame_bytes);
  return detail::read_transport_frame(in, record.config.n_theta,
                                      record.config.quantiles);
}

}  // namespace swflow
