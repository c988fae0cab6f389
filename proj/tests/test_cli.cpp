// End-to-end checks of the fnlslab binary: exit codes, output files,
// manifest verification.  The binary path arrives via $FNLSLAB_BIN.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string binary() {
  const char* p = std::getenv("FNLSLAB_BIN");
  REQUIRE(p != nullptr);
  return p;
}

fs::path work_dir() {
  static fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "fnlslab-cli-test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = work_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSimulateCfg =
    "model.n_modes = 8\n"
    "noise.cutoff = 4\n"
    "noise.target_h_norm_sq = 1.0\n"
    "experiment.kind = simulate\n"
    "experiment.gamma = 0.5\n"
    "experiment.T = 1.0\n"
    "integrator.seed = 5\n";

}  // namespace

TEST_CASE("cli: help and version exit cleanly") {
  CHECK(run("--help") == 0);
  CHECK(run("simulate --help") == 0);
  CHECK(run("--version") == 0);
}

TEST_CASE("cli: usage errors exit with the parse code") {
  CHECK(run("") == 2);
  CHECK(run("unknown-subcommand") == 2);
  CHECK(run("simulate") == 2);  // --config is required
}

TEST_CASE("cli: config parse errors exit 2, validation errors exit 3") {
  const auto bad_syntax = write_file("bad_syntax.cfg", "this is not a config\n");
  CHECK(run("simulate --config " + bad_syntax.string()) == 2);

  const auto bad_values = write_file(
      "bad_values.cfg", "model.sigma = 3\nmodel.alpha = 1\nmodel.beta = 1\n");
  CHECK(run("simulate --config " + bad_values.string()) == 3);

  const auto missing = work_dir() / "does_not_exist.cfg";
  CHECK(run("simulate --config " + missing.string()) == 2);

  // a stationary config pushed through the sweep subcommand lacks gamma_list
  const auto sta = write_file("sta.cfg",
                              "experiment.kind = stationary\n"
                              "experiment.gamma = 0.5\n"
                              "experiment.T = 5\nexperiment.burn_in = 1\n"
                              "experiment.n_traj = 4\nmodel.n_modes = 4\n");
  CHECK(run("sweep --config " + sta.string()) == 3);
}

TEST_CASE("cli: unwritable output directory exits 4") {
  const auto cfg = write_file("sim.cfg", kSimulateCfg);
  CHECK(run("simulate --config " + cfg.string() + " --out /dev/null/nope") == 4);
}

TEST_CASE("cli: numerical aborts exit 5") {
  const auto cfg = write_file("blowup.cfg",
                              "model.n_modes = 4\n"
                              "noise.family = none\n"
                              "experiment.kind = simulate\n"
                              "experiment.gamma = 0\n"
                              "experiment.T = 1.0\n"
                              "initial.kind = single_mode\n"
                              "initial.mode = 1\n"
                              "initial.amplitude = 1e200\n");
  CHECK(run("simulate --config " + cfg.string()) == 5);
}

TEST_CASE("cli: simulate then report round-trips the manifest") {
  const auto cfg = write_file("sim2.cfg", kSimulateCfg);
  const fs::path out = work_dir() / "simout";
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string()) ==
          0);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(run("report " + (out / "manifest.txt").string()) == 0);

  // tampering is detected
  std::ofstream(out / "trajectory.csv", std::ios::binary) << "tampered";
  CHECK(run("report " + (out / "manifest.txt").string()) == 4);
}

TEST_CASE("cli: seed override changes outputs, same seed reproduces them") {
  const auto cfg = write_file("sim3.cfg", kSimulateCfg);
  const fs::path a = work_dir() / "seed-a";
  const fs::path b = work_dir() / "seed-b";
  const fs::path c = work_dir() / "seed-c";
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 42 --out " +
              a.string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 42 --out " +
              b.string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 43 --out " +
              c.string()) == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "trajectory.csv") != slurp(c / "trajectory.csv"));
}

TEST_CASE("cli: FNLSLAB_OUT provides the default output directory") {
  const auto cfg = write_file("sim_env.cfg", kSimulateCfg);
  const fs::path out = work_dir() / "envout";
  const std::string cmd = "FNLSLAB_OUT=" + out.string() + " " + binary() +
                          " simulate --config " + cfg.string() +
                          " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
}

TEST_CASE("cli: stationary writes the summary with the identity target") {
  const auto cfg = write_file("sta2.cfg",
                              "model.n_modes = 8\n"
                              "noise.cutoff = 4\n"
                              "noise.target_h_norm_sq = 1.0\n"
                              "experiment.kind = stationary\n"
                              "experiment.gamma = 0.5\n"
                              "experiment.T = 20\n"
                              "experiment.burn_in = 5\n"
                              "experiment.n_traj = 8\n"
                              "integrator.dt = 0.002\n");
  const fs::path out = work_dir() / "staout";
  REQUIRE(run("stationary --config " + cfg.string() + " --out " + out.string() +
              " --threads 2") == 0);
  const std::string summary = slurp(out / "stationary_summary.txt");
  CHECK(summary.find("target_mean_mass 0.5") != std::string::npos);
  CHECK(summary.find("mass_identity_z") != std::string::npos);
}

TEST_CASE("cli: verify (quick) passes and is byte-reproducible") {
  const fs::path a = work_dir() / "verify-a";
  const fs::path b = work_dir() / "verify-b";
  REQUIRE(run("verify --seed 20240804 --quiet --out " + a.string()) == 0);
  REQUIRE(run("verify --seed 20240804 --quiet --out " + b.string()) == 0);

  const std::string table = slurp(a / "verify_table.txt");
  CHECK(table.find("overall PASS") != std::string::npos);
  for (int i = 1; i <= 10; ++i) {
    char id[6];
    snprintf(id, sizeof id, "AC%02d", i);
    CHECK(table.find(std::string("criterion ") + id) != std::string::npos);
  }

  // every data file byte-identical across the two runs
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    if (rel.filename() == "manifest.txt") continue;  // timestamps
    CHECK(slurp(entry.path()) == slurp(b / rel));
  }
}
