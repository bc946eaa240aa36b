// Command-line front end: sketch a dataset, run the flow, replay recorded
// maps on fresh particles, estimate sliced-Wasserstein distances, and
// generate toy mixture data.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <optional>
#include <string>

#include "swflow/swflow.hpp"

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string strip_extension(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  const auto pos = path.rfind('.');
  if (pos == std::string::npos || (slash != std::string::npos && pos < slash)) {
    return path;
  }
  return path.substr(0, pos);
}

struct SketchArgs {
  std::string data_path;
  std::string out_path;
  std::size_t n_theta = 30;
  std::size_t q = 100;
  std::uint64_t seed = 42;
  std::size_t batch = 0;
};

void run_sketch(const SketchArgs& args) {
  std::printf("[config] cmd=sketch data=%s out=%s ntheta=%zu q=%zu seed=%" PRIu64
              " batch=%zu\n",
              args.data_path.c_str(), args.out_path.c_str(), args.n_theta, args.q,
              args.seed, args.batch);
  const auto data =
      swflow::load_matrix(args.data_path, swflow::matrix_format_from_path(args.data_path));
  const auto dirs = swflow::sample_directions(data.d, args.n_theta, args.seed);
  const std::optional<std::size_t> batch =
      args.batch > 0 ? std::optional<std::size_t>(args.batch) : std::nullopt;
  const auto sketch = swflow::build_sketch(data, dirs, args.q, batch, args.seed);
  swflow::save_sketch(sketch, args.out_path);
  std::printf("sketch: directions=%zu q=%zu fingerprint=%016" PRIx64 "\n",
              sketch.n_theta(), sketch.q, sketch.source_fingerprint);
}

struct FlowArgs {
  std::string sketch_path;
  std::string out_path;
  std::size_t n = 5000;
  double h = 1.0;
  double lambda = 1e-4;
  std::size_t iters = 200;
  std::uint64_t seed = 42;
  std::size_t n_theta = 0;  // 0 = all sketch directions
  std::string record_path;
  std::string log_path;
  std::size_t plot_every = 0;
  std::string plot_prefix;
  bool resample_dirs = false;
  bool early_stop = false;
};

void run_flow_cmd(const FlowArgs& args) {
  const auto sketch = swflow::load_sketch(args.sketch_path);
  swflow::FlowConfig cfg;
  cfg.n_particles = args.n;
  cfg.n_theta = args.n_theta == 0 ? sketch.n_theta() : args.n_theta;
  cfg.step_size = args.h;
  cfg.lambda = args.lambda;
  cfg.iterations = args.iters;
  cfg.quantiles = sketch.q;
  cfg.seed = args.seed;
  cfg.direction_mode = args.resample_dirs ? swflow::DirectionMode::Resampled
                                          : swflow::DirectionMode::Fixed;
  cfg.record_maps = !args.record_path.empty();
  cfg.early_stop = args.early_stop;
  cfg.validate();
  std::printf("[config] cmd=flow sketch=%s out=%s n=%zu ntheta=%zu h=%s lambda=%s "
              "iters=%zu q=%zu seed=%" PRIu64 " mode=%s record=%s log=%s "
              "plot-every=%zu early-stop=%d\n",
              args.sketch_path.c_str(), args.out_path.c_str(), cfg.n_particles,
              cfg.n_theta, format_double(cfg.step_size).c_str(),
              format_double(cfg.lambda).c_str(), cfg.iterations, cfg.quantiles,
              cfg.seed,
              cfg.direction_mode == swflow::DirectionMode::Fixed ? "fixed" : "resampled",
              args.record_path.empty() ? "-" : args.record_path.c_str(),
              args.log_path.empty() ? "-" : args.log_path.c_str(), args.plot_every,
              cfg.early_stop ? 1 : 0);

  const auto init = swflow::gaussian_cloud(
      cfg.n_particles, sketch.dimension(),
      swflow::RngStream::from_seed(cfg.seed).child("init"));

  std::optional<swflow::TransportMapWriter> writer;
  if (cfg.record_maps) {
    writer.emplace(args.record_path, cfg, sketch.directions);
  }

  swflow::FlowObserver observer;
  const std::string plot_prefix = args.plot_prefix.empty()
                                      ? strip_extension(args.out_path) + "_iter"
                                      : args.plot_prefix;
  if (args.plot_every > 0 && sketch.dimension() == 2) {
    observer = [&](std::size_t k, const swflow::PointCloud& cloud) {
      if (k % args.plot_every != 0 && k != cfg.iterations) return;
      char name[512];
      std::snprintf(name, sizeof(name), "%s%06zu.svg", plot_prefix.c_str(), k);
      swflow::write_scatter_svg(cloud, name, "particles at iteration " + std::to_string(k));
    };
  } else if (args.plot_every > 0) {
    std::printf("plots: skipped (cloud dimension %zu, plots are 2D only)\n",
                sketch.dimension());
  }

  const auto result =
      swflow::run_flow(init, sketch, cfg, writer ? &*writer : nullptr, observer);
  if (writer) writer->close();
  swflow::save_matrix(result.cloud, args.out_path,
                      swflow::matrix_format_from_path(args.out_path));

  if (!args.log_path.empty()) {
    std::FILE* log = std::fopen(args.log_path.c_str(), "w");
    if (log == nullptr) {
      throw swflow::DataError("cannot open for writing: " + args.log_path);
    }
    std::fprintf(log, "iter,sw2,wall_ms\n");
    for (std::size_t k = 0; k < result.log.entries.size(); ++k) {
      const auto& e = result.log.entries[k];
      std::fprintf(log, "%zu,%.17g,%.3f\n", k, e.sw2, e.wall_ms);
    }
    std::fclose(log);
  }

  const auto& final_entry = result.log.entries.back();
  std::printf("flow: iterations=%zu final_sw2=%.12g stderr=%.12g\n",
              result.log.entries.size() - 1, final_entry.sw2,
              final_entry.sw2_standard_error);
}

struct ReplayArgs {
  std::string record_path;
  std::string sketch_path;
  std::string out_path;
  std::size_t n = 0;  // 0 = the recorded particle count
  std::uint64_t seed = 43;
};

void run_replay(const ReplayArgs& args) {
  std::printf("[config] cmd=replay record=%s sketch=%s out=%s n=%zu seed=%" PRIu64
              "\n",
              args.record_path.c_str(), args.sketch_path.c_str(),
              args.out_path.c_str(), args.n, args.seed);
  const auto record = swflow::load_transport_record(args.record_path);
  const auto sketch = swflow::load_sketch(args.sketch_path);
  const std::size_t n = args.n == 0 ? record.config.n_particles : args.n;
  const auto fresh = swflow::gaussian_cloud(
      n, sketch.dimension(), swflow::RngStream::from_seed(args.seed).child("init"));
  const auto cloud = swflow::replay_flow(fresh, record, sketch, args.seed);
  swflow::save_matrix(cloud, args.out_path,
                      swflow::matrix_format_from_path(args.out_path));
  const auto monitor = swflow::monitor_directions(record.config, sketch.n_theta());
  const auto est = swflow::sw2_to_sketch(cloud, sketch, monitor);
  std::printf("replay: frames=%zu particles=%zu final_sw2=%.12g stderr=%.12g\n",
              record.frames.size(), n, est.mean, est.standard_error);
}

struct SwdistArgs {
  std::string a_path;
  std::string b_path;
  std::size_t n_theta = 200;
  std::size_t q = 100;
  std::uint64_t seed = 42;
};

void run_swdist(const SwdistArgs& args) {
  std::printf("[config] cmd=swdist a=%s b=%s ntheta=%zu q=%zu seed=%" PRIu64 "\n",
              args.a_path.c_str(), args.b_path.c_str(), args.n_theta, args.q,
              args.seed);
  const auto a =
      swflow::load_matrix(args.a_path, swflow::matrix_format_from_path(args.a_path));
  const auto b =
      swflow::load_matrix(args.b_path, swflow::matrix_format_from_path(args.b_path));
  const auto dirs = swflow::sample_directions(a.d, args.n_theta, args.seed);
  const auto est = swflow::sw2_estimate_detailed(a, b, dirs, args.q);
  std::printf("sw2=%.12g stderr=%.12g\n", est.mean, est.standard_error);
}

struct GmmGenArgs {
  std::string out_path;
  std::size_t d = 2;
  std::size_t components = 10;
  std::size_t p = 50000;
  double min_separation = 6.0;
  std::uint64_t seed = 42;
};

void run_gmm_gen(const GmmGenArgs& args) {
  std::printf("[config] cmd=gmm-gen out=%s d=%zu components=%zu p=%zu min-sep=%s "
              "seed=%" PRIu64 "\n",
              args.out_path.c_str(), args.d, args.components, args.p,
              format_double(args.min_separation).c_str(), args.seed);
  const auto spec = swflow::random_gmm_spec(args.d, args.components,
                                            args.min_separation, args.seed);
  const auto cloud = swflow::gmm_sample(spec, args.p);
  swflow::save_matrix(cloud, args.out_path,
                      swflow::matrix_format_from_path(args.out_path));
  std::printf("gmm-gen: wrote %zu points in %zu dimensions\n", cloud.n, cloud.d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swflow: sliced-Wasserstein flow engine"};
  app.require_subcommand(1);
  app.fallthrough(true);
  unsigned threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = all hardware threads)");

  SketchArgs sketch_args;
  auto* sketch = app.add_subcommand("sketch", "summarize a dataset into per-direction quantile tables");
  sketch->add_option("data", sketch_args.data_path, "input matrix (.swmx or .csv)")->required();
  sketch->add_option("--out", sketch_args.out_path, "output sketch (.swsk)")->required();
  sketch->add_option("--ntheta", sketch_args.n_theta, "number of projection directions")->check(CLI::PositiveNumber);
  sketch->add_option("--q", sketch_args.q, "quantiles per direction")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
  sketch->add_option("--seed", sketch_args.seed, "seed for directions and batches");
  sketch->add_option("--batch", sketch_args.batch, "per-direction mini-batch size (0 = full data)");
  sketch->callback([&] { swflow::par::set_max_threads(threads); run_sketch(sketch_args); });

  FlowArgs flow_args;
  auto* flow = app.add_subcommand("flow", "run the sliced-Wasserstein flow against a sketch");
  flow->set_help_flag("--help", "print help");  // frees --h for the step size
  flow->add_option("sketch", flow_args.sketch_path, "target sketch (.swsk)")->required();
  flow->add_option("--out", flow_args.out_path, "final particles (.swmx or .csv)")->required();
  flow->add_option("--n", flow_args.n, "particle count")->check(CLI::PositiveNumber);
  flow->add_option("--h", flow_args.h, "step size")->check(CLI::PositiveNumber);
  flow->add_option("--lambda", flow_args.lambda, "entropic noise level")->check(CLI::NonNegativeNumber);
  flow->add_option("--iters", flow_args.iters, "iteration count");
  flow->add_option("--seed", flow_args.seed, "seed for init and noise");
  flow->add_option("--ntheta", flow_args.n_theta, "directions per iteration (0 = whole sketch pool)");
  flow->add_option("--record", flow_args.record_path, "record transport maps (.swtm)");
  flow->add_option("--log", flow_args.log_path, "per-iteration CSV log");
  flow->add_option("--plot-every", flow_args.plot_every, "write an SVG scatter every M iterations (2D only)");
  flow->add_option("--plot-prefix", flow_args.plot_prefix, "SVG filename prefix");
  flow->add_flag("--resample-dirs", flow_args.resample_dirs, "draw a fresh direction subset each iteration");
  flow->add_flag("--early-stop", flow_args.early_stop, "stop when the monitor plateaus");
  flow->callback([&] { swflow::par::set_max_threads(threads); run_flow_cmd(flow_args); });

  ReplayArgs replay_args;
  auto* replay = app.add_subcommand("replay", "transport fresh particles through recorded maps");
  replay->add_option("record", replay_args.record_path, "transport maps (.swtm)")->required();
  replay->add_option("sketch", replay_args.sketch_path, "target sketch (.swsk)")->required();
  replay->add_option("--out", replay_args.out_path, "output particles")->required();
  replay->add_option("--n", replay_args.n, "fresh particle count (0 = as recorded)");
  replay->add_option("--seed", replay_args.seed, "seed for fresh init and noise");
  replay->callback([&] { swflow::par::set_max_threads(threads); run_replay(replay_args); });

  SwdistArgs swdist_args;
  auto* swdist = app.add_subcommand("swdist", "estimate the sliced-Wasserstein distance between two clouds");
  swdist->add_option("a", swdist_args.a_path, "first matrix")->required();
  swdist->add_option("b", swdist_args.b_path, "second matrix")->required();
  swdist->add_option("--ntheta", swdist_args.n_theta, "number of directions")->check(CLI::PositiveNumber);
  swdist->add_option("--q", swdist_args.q, "quantiles per direction")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
  swdist->add_option("--seed", swdist_args.seed, "direction seed");
  swdist->callback([&] { swflow::par::set_max_threads(threads); run_swdist(swdist_args); });

  GmmGenArgs gmm_args;
  auto* gmm = app.add_subcommand("gmm-gen", "sample a random well-separated Gaussian mixture");
  gmm->add_option("--out", gmm_args.out_path, "output matrix")->required();
  gmm->add_option("--d", gmm_args.d, "dimension")->check(CLI::PositiveNumber);
  gmm->add_option("--components", gmm_args.components, "mixture components")->check(CLI::PositiveNumber);
  gmm->add_option("--p", gmm_args.p, "sample count")->check(CLI::PositiveNumber);
  gmm->add_option("--min-sep", gmm_args.min_separation, "centroid separation in mean-std units");
  gmm->add_option("--seed", gmm_args.seed, "mixture seed");
  gmm->callback([&] { swflow::par::set_max_threads(threads); run_gmm_gen(gmm_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const swflow::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const swflow::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
