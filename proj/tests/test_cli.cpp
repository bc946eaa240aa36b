#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = SWFLOW_CLI_PATH;

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run(const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const std::string cmd =
      cli + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double parse_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::strtod(text.c_str() + pos + key.size(), nullptr);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("swflow_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("the full command-line workflow holds together", "[cli]") {
  TempDir tmp;
  const auto p = [&](const char* name) { return (tmp.path / name).string(); };

  // Generate toy data.
  auto gen = run("gmm-gen --out " + p("data.swmx") +
                     " --d 2 --components 4 --p 2000 --seed 5",
                 tmp.path);
  INFO(gen.output);
  REQUIRE(gen.exit_code == 0);
  REQUIRE(fs::exists(p("data.swmx")));
  REQUIRE(gen.output.find("[config] cmd=gmm-gen") != std::string::npos);

  // Sketch it.
  auto sk = run("sketch " + p("data.swmx") + " --out " + p("target.swsk") +
                    " --ntheta 12 --q 40 --seed 7",
                tmp.path);
  INFO(sk.output);
  REQUIRE(sk.exit_code == 0);
  REQUIRE(sk.output.find("directions=12") != std::string::npos);
  REQUIRE(sk.output.find("fingerprint=") != std::string::npos);

  // Run a short flow with recording, logging and plotting.
  const std::string flow_args = "flow " + p("target.swsk") + " --out " +
                                p("out.swmx") + " --n 300 --iters 6 --seed 11 " +
                                "--record " + p("maps.swtm") + " --log " +
                                p("log.csv") + " --plot-every 3";
  auto fl = run(flow_args, tmp.path);
  INFO(fl.output);
  REQUIRE(fl.exit_code == 0);
  REQUIRE(fs::exists(p("out.swmx")));
  REQUIRE(fs::exists(p("maps.swtm")));
  REQUIRE(fs::exists(p("log.csv")));
  REQUIRE(fs::exists(p("out_iter000000.svg")));
  REQUIRE(fs::exists(p("out_iter000003.svg")));
  REQUIRE(fs::exists(p("out_iter000006.svg")));

  // The log has a header and one row per state.
  std::ifstream log(p("log.csv"));
  std::string line;
  std::getline(log, line);
  REQUIRE(line == "iter,sw2,wall_ms");
  std::vector<double> sw2;
  while (std::getline(log, line)) {
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    REQUIRE(c1 != std::string::npos);
    REQUIRE(c2 != std::string::npos);
    sw2.push_back(std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr));
  }
  REQUIRE(sw2.size() == 7);
  REQUIRE(sw2.back() < sw2.front());

  // Determinism: the same command reproduces the particle file bit-for-bit.
  auto fl2 = run("flow " + p("target.swsk") + " --out " + p("out2.swmx") +
                     " --n 300 --iters 6 --seed 11",
                 tmp.path);
  REQUIRE(fl2.exit_code == 0);
  REQUIRE(file_bytes(p("out.swmx")) == file_bytes(p("out2.swmx")));

  // Replay with the training seed reproduces the training trajectory, so the
  // final distance matches the last log row.
  auto rp = run("replay " + p("maps.swtm") + " " + p("target.swsk") + " --out " +
                    p("replayed.swmx") + " --seed 11",
                tmp.path);
  INFO(rp.output);
  REQUIRE(rp.exit_code == 0);
  REQUIRE(file_bytes(p("replayed.swmx")) == file_bytes(p("out.swmx")));
  const double replay_sw2 = parse_after(rp.output, "final_sw2=");
  REQUIRE(replay_sw2 == Catch::Approx(sw2.back()).epsilon(1e-9));

  // A replay with a fresh seed still lands near the target.
  auto rp2 = run("replay " + p("maps.swtm") + " " + p("target.swsk") + " --out " +
                     p("replayed2.swmx") + " --seed 999",
                 tmp.path);
  REQUIRE(rp2.exit_code == 0);
  REQUIRE(file_bytes(p("replayed2.swmx")) != file_bytes(p("out.swmx")));

  // Self-distance is zero.
  auto sd = run("swdist " + p("data.swmx") + " " + p("data.swmx") +
                    " --ntheta 32 --seed 3",
                tmp.path);
  INFO(sd.output);
  REQUIRE(sd.exit_code == 0);
  REQUIRE(parse_after(sd.output, "sw2=") < 1e-12);

  // Distance between different clouds is positive and echoes its config.
  auto sd2 = run("swdist " + p("data.swmx") + " " + p("out.swmx") +
                     " --ntheta 32 --seed 3",
                 tmp.path);
  REQUIRE(sd2.exit_code == 0);
  REQUIRE(parse_after(sd2.output, "sw2=") > 0.0);
  REQUIRE(sd2.output.find("[config] cmd=swdist") != std::string::npos);

  // CSV works anywhere a matrix does, and the two encodings agree.
  auto gen_csv = run("gmm-gen --out " + p("data.csv") +
                         " --d 2 --components 4 --p 2000 --seed 5",
                     tmp.path);
  REQUIRE(gen_csv.exit_code == 0);
  auto cross = run("swdist " + p("data.csv") + " " + p("data.swmx") +
                       " --ntheta 16 --seed 9",
                   tmp.path);
  REQUIRE(cross.exit_code == 0);
  REQUIRE(parse_after(cross.output, "sw2=") < 1e-12);
}

TEST_CASE("exit codes distinguish failure classes", "[cli]") {
  TempDir tmp;
  const auto p = [&](const char* name) { return (tmp.path / name).string(); };

  // Usage errors.
  REQUIRE(run("", tmp.path).exit_code == 1);
  REQUIRE(run("frobnicate", tmp.path).exit_code == 1);
  REQUIRE(run("flow", tmp.path).exit_code == 1);
  REQUIRE(run("gmm-gen --out x.swmx --p 0", tmp.path).exit_code == 1);

  // Help is not an error.
  REQUIRE(run("--help", tmp.path).exit_code == 0);

  // Data errors.
  REQUIRE(run("sketch " + p("missing.swmx") + " --out " + p("s.swsk"), tmp.path)
              .exit_code == 2);
  std::ofstream(p("junk.swsk"), std::ios::binary) << "JUNKJUNKJUNKJUNK";
  REQUIRE(run("flow " + p("junk.swsk") + " --out " + p("o.swmx"), tmp.path)
              .exit_code == 2);

  // Numerical failure: an absurd step size overflows the particles.
  auto gen = run("gmm-gen --out " + p("d.swmx") + " --d 1 --components 1 --p 64 "
                     "--seed 2",
                 tmp.path);
  REQUIRE(gen.exit_code == 0);
  auto sk = run("sketch " + p("d.swmx") + " --out " + p("s.swsk") +
                    " --ntheta 2 --q 8 --seed 2",
                tmp.path);
  REQUIRE(sk.exit_code == 0);
  auto fl = run("flow " + p("s.swsk") + " --out " + p("o.swmx") +
                    " --n 16 --iters 2 --h 1e308 --lambda 0 --seed 1",
                tmp.path);
  INFO(fl.output);
  REQUIRE(fl.exit_code == 3);
}
