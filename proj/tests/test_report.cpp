#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fnls/experiment.hpp"
#include "fnls/report.hpp"

using namespace fnls;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto p = std::filesystem::temp_directory_path() / ("fnlslab-test-" + tag);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("observable CSV round-trips exactly") {
  ObservableSeries s;
  for (int i = 0; i < 200; ++i) {
    const NormalPair g = normal_pair(3, RngStream::scalars, uint64_t(i), 4, 0);
    const NormalPair h = normal_pair(3, RngStream::scalars, uint64_t(i), 4, 1);
    const NormalPair k = normal_pair(3, RngStream::scalars, uint64_t(i), 4, 2);
    s.times.push_back(i * 0.1);
    s.mass.push_back(std::exp(g.g0));
    s.energy.push_back(g.g1 * 1e3);
    s.modified_energy.push_back(h.g0 * 1e-7);
    s.v_norm_sq.push_back(std::abs(h.g1));
    s.residual_h.push_back(std::abs(k.g0) * 1e-15);
  }
  const ObservableSeries r = series_from_csv(series_to_csv(s));
  CHECK(r.times == s.times);
  CHECK(r.mass == s.mass);
  CHECK(r.energy == s.energy);
  CHECK(r.modified_energy == s.modified_energy);
  CHECK(r.v_norm_sq == s.v_norm_sq);
  CHECK(r.residual_h == s.residual_h);

  CHECK_THROWS_AS(series_from_csv("wrong,header\n"), IoError);
  CHECK_THROWS_AS(
      series_from_csv("t,mass,energy,modified_energy,v_norm_sq,residual_h\n"
                      "1,2,3\n"),
      IoError);
}

TEST_CASE("manifest round trip and checksum verification") {
  const auto dir = temp_dir("manifest");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "data.txt", std::ios::binary);
    out << "payload";
  }
  RunManifest m;
  m.config_hash = "deadbeef00000000";
  m.gn_constant = 0.25;
  m.hs_norm_h_sq = 1.0;
  m.hs_norm_v_sq = 2.5;
  m.wall_time_seconds = 1.5;
  m.generated_at = "2026-01-01T00:00:00Z";
  m.files.push_back(ManifestFile{"data.txt", fnv1a64_hex("payload"), 7});

  const RunManifest r = manifest_from_text(manifest_to_text(m));
  CHECK(r.config_hash == m.config_hash);
  CHECK(r.gn_constant == m.gn_constant);
  CHECK(r.files.size() == 1);
  CHECK(r.files[0].checksum == m.files[0].checksum);

  CHECK(verify_manifest(r, dir.string()).empty());
  {
    std::ofstream out(dir / "data.txt", std::ios::binary);
    out << "tampered";
  }
  const auto problems = verify_manifest(r, dir.string());
  REQUIRE_FALSE(problems.empty());
  CHECK(problems[0].find("data.txt") != std::string::npos);

  CHECK_THROWS_AS(manifest_from_text("fnlslab-manifest v99\n"), IoError);
  CHECK_THROWS_AS(manifest_from_text("something else\n"), IoError);
}

TEST_CASE("summaries carry the identity targets and pass flags") {
  EnsembleStats s;
  s.n_traj = 8;
  s.samples_per_traj = 100;
  s.gamma = 0.5;
  s.phi_norms = HsNorms{1.0, 4.0};
  s.mean_mass = {0.51, 0.01};
  s.mass_moments = {MomentEstimate{0.51, 0.01}, MomentEstimate{0.3, 0.01},
                    MomentEstimate{0.2, 0.01}};
  s.energy_moments = {MomentEstimate{1.0, 0.1}, MomentEstimate{2.0, 0.1},
                      MomentEstimate{6.0, 0.1}};
  const ModelParams p{1.0, -1, 1.0, 0.5};
  const std::string text = stationary_summary(s, p);
  CHECK(text.find("fnlslab-summary v1") == 0);
  CHECK(text.find("target_mean_mass 0.5") != std::string::npos);
  CHECK(text.find("mass_moment p=2") != std::string::npos);
  const auto zline = text.find("mass_identity_z ");
  REQUIRE(zline != std::string::npos);
  CHECK(text.find(" pass 1", zline) != std::string::npos);

  SweepResult sr;
  sr.gamma_values = {0.5, 0.1};
  sr.entries.resize(2);
  for (int i = 0; i < 2; ++i) {
    sr.entries[i].gamma = sr.gamma_values[i];
    sr.entries[i].ok = true;
    sr.entries[i].stats = s;
    sr.entries[i].mass_identity_ok = true;
  }
  sr.residual_exponent = 0.5;
  const std::string sw = sweep_summary(sr);
  CHECK(sw.find("fnlslab-sweep-summary v1") == 0);
  CHECK(sw.find("columns gamma mean_mass se target pass") != std::string::npos);
  // one row per gamma
  size_t rows = 0, pos = 0;
  while ((pos = sw.find("\nrow ", pos)) != std::string::npos) {
    ++rows;
    ++pos;
  }
  CHECK(rows == 2);
  CHECK(sw.find("label artifact-derived") != std::string::npos);
}

TEST_CASE("plotdata and SVG rendering") {
  const std::string pd = plotdata("x", "y", {1.0, 2.0}, {3.0, 4.5});
  CHECK(pd.find("# fnlslab-plotdata v1") == 0);
  CHECK(pd.find("\n1 3\n") != std::string::npos);
  const std::string svg =
      svg_line_plot("demo", {1.0, 2.0, 3.0}, {0.5, 0.7, 0.6});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("run_experiment: simulate writes a parseable trajectory") {
  ExperimentConfig cfg;
  cfg.n_modes = 8;
  cfg.cutoff = 4;
  cfg.target_h_norm_sq = 1.0;
  cfg.kind = ExperimentKind::simulate;
  cfg.gamma = 0.5;
  cfg.T = 2.0;
  cfg.integrator.seed = 77;
  cfg.emit_svg = true;
  const auto dir = temp_dir("simulate");
  RunOverrides ov;
  ov.out_dir = dir.string();
  const ExperimentResult res = run_experiment(cfg, ov);
  CHECK(res.manifest.files.size() == 3);
  CHECK(verify_manifest(res.manifest, dir.string()).empty());

  const ObservableSeries s = series_from_csv(slurp(dir / "trajectory.csv"));
  const Basis b = build_basis_from(cfg);
  const ObservableSeries direct =
      run(zero_field(b), cfg.T, b, build_params(cfg, cfg.gamma),
          build_noise(cfg), cfg.integrator);
  CHECK(s.mass == direct.mass);
  CHECK(s.residual_h == direct.residual_h);
}

TEST_CASE("run_experiment: identical configs yield identical checksums") {
  ExperimentConfig cfg;
  cfg.n_modes = 8;
  cfg.cutoff = 4;
  cfg.target_h_norm_sq = 1.0;
  cfg.kind = ExperimentKind::stationary;
  cfg.gamma = 0.5;
  cfg.T = 10.0;
  cfg.burn_in = 2.0;
  cfg.n_traj = 8;
  cfg.integrator.seed = 99;
  const auto da = temp_dir("repro-a");
  const auto db = temp_dir("repro-b");
  RunOverrides ova, ovb;
  ova.out_dir = da.string();
  ovb.out_dir = db.string();
  ova.threads = 2;
  ovb.threads = 1;  // scheduling must not matter
  const ExperimentResult a = run_experiment(cfg, ova);
  const ExperimentResult b = run_experiment(cfg, ovb);
  REQUIRE(a.manifest.files.size() == b.manifest.files.size());
  for (size_t i = 0; i < a.manifest.files.size(); ++i) {
    CHECK(a.manifest.files[i].path == b.manifest.files[i].path);
    CHECK(a.manifest.files[i].checksum == b.manifest.files[i].checksum);
    CHECK(slurp(da / a.manifest.files[i].path) ==
          slurp(db / b.manifest.files[i].path));
  }
  CHECK(a.manifest.config_hash == b.manifest.config_hash);
}

TEST_CASE("run_experiment: output format selection is honored") {
  ExperimentConfig cfg;
  cfg.n_modes = 4;
  cfg.cutoff = 2;
  cfg.kind = ExperimentKind::stationary;
  cfg.gamma = 1.0;
  cfg.T = 5.0;
  cfg.burn_in = 1.0;
  cfg.n_traj = 4;
  cfg.emit_csv = false;
  cfg.emit_plotdata = false;
  cfg.emit_svg = false;
  cfg.emit_summary = true;
  const auto dir = temp_dir("formats");
  RunOverrides ov;
  ov.out_dir = dir.string();
  const ExperimentResult res = run_experiment(cfg, ov);
  CHECK(res.manifest.files.size() == 1);
  CHECK(res.manifest.files[0].path == "stationary_summary.txt");
  CHECK(std::filesystem::exists(dir / "manifest.txt"));
}

TEST_CASE("run_experiment: sweep emits one stats file per gamma") {
  ExperimentConfig cfg;
  cfg.n_modes = 6;
  cfg.cutoff = 3;
  cfg.target_h_norm_sq = 0.5;
  cfg.kind = ExperimentKind::sweep;
  cfg.gamma_list = {1.0, 0.5, 0.25, 0.125};
  cfg.T = 8.0;
  cfg.burn_in = 2.0;
  cfg.n_traj = 6;
  cfg.t_det = 2.0;
  const auto dir = temp_dir("sweep");
  RunOverrides ov;
  ov.out_dir = dir.string();
  const ExperimentResult res = run_experiment(cfg, ov);
  int stats_files = 0;
  for (const auto& f : res.manifest.files)
    if (f.path.rfind("stats_gamma_", 0) == 0) ++stats_files;
  CHECK(stats_files == 4);
  CHECK(std::filesystem::exists(dir / "sweep_summary.txt"));
  const std::string summary = slurp(dir / "sweep_summary.txt");
  CHECK(summary.find("n_gamma 4") != std::string::npos);
  CHECK(summary.find("conservation max_mass_drift") != std::string::npos);
}
