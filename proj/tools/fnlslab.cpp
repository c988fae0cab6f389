// fnlslab: batch driver for the damped stochastic fractional NLS lab.
// Subcommands: simulate | stationary | sweep | verify | report.
// Exit codes: 0 ok, 1 verify criteria failed, 2 parse error,
//             3 validation error, 4 I/O error, 5 numerical abort.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fnls/experiment.hpp"
#include "fnls/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* copt = cmd->add_option("--config", args.config_path,
                               "experiment configuration file");
  if (config_required) copt->required();
  cmd->add_option("--seed", args.seed, "override integrator.seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir,
                  "output directory (default: config, then $FNLSLAB_OUT, "
                  "then ./out)");
  cmd->add_option("--threads", args.threads,
                  "worker threads for ensembles (0 = all cores)");
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

int run_kind(fnls::ExperimentKind kind, const CommonArgs& args,
             bool full_profile) {
  using namespace fnls;
  ExperimentConfig cfg;
  try {
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
  } catch (const ConfigParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigValidationError& e) {
    std::cerr << "validation errors:\n";
    for (const auto& msg : e.errors) std::cerr << "  " << msg << "\n";
    return 3;
  }
  cfg.kind = kind;
  if (full_profile) cfg.profile = VerifyProfile::full;

  RunOverrides ov;
  if (args.seed_set) ov.seed = args.seed;
  ov.out_dir = args.out_dir;
  ov.threads = args.threads;
  ov.quiet = args.quiet;

  try {
    const ExperimentResult result = run_experiment(cfg, ov);
    if (!args.quiet) {
      std::cerr << "outputs in " << result.out_dir << " ("
                << result.manifest.files.size() << " files, manifest.txt)\n";
    }
    if (kind == ExperimentKind::verify && !result.verify_all_pass) {
      std::cerr << "verify: one or more criteria FAILED (see verify_table.txt)\n";
      return 1;
    }
    return 0;
  } catch (const ConfigValidationError& e) {
    std::cerr << "validation errors:\n";
    for (const auto& msg : e.errors) std::cerr << "  " << msg << "\n";
    return 3;
  } catch (const TrajectoryAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 5;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
}

int run_report(const std::string& manifest_path) {
  using namespace fnls;
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) {
    std::cerr << "i/o error: cannot open " << manifest_path << "\n";
    return 4;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  RunManifest m;
  try {
    m = manifest_from_text(ss.str());
  } catch (const IoError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "code_version   " << m.code_version << "\n";
  std::cout << "config_hash    " << m.config_hash << "\n";
  std::cout << "generated_at   " << m.generated_at << "\n";
  std::cout << "wall_time      " << m.wall_time_seconds << " s\n";
  std::cout << "hs_norm_h_sq   " << m.hs_norm_h_sq << "\n";
  std::cout << "hs_norm_v_sq   " << m.hs_norm_v_sq << "\n";
  std::cout << "gn_constant    " << m.gn_constant << "\n";
  const std::string dir =
      std::filesystem::path(manifest_path).parent_path().string();
  const auto problems = verify_manifest(m, dir.empty() ? "." : dir);
  for (const auto& f : m.files) {
    bool bad = false;
    for (const auto& p : problems)
      if (p.rfind(f.path + ":", 0) == 0) bad = true;
    std::cout << (bad ? "MISMATCH " : "OK       ") << f.path << " (" << f.bytes
              << " bytes, " << f.checksum << ")\n";
  }
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "problem: " << p << "\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral lab for the damped stochastic fractional NLS"};
  app.set_version_flag("--version", fnls::kVersion);
  app.require_subcommand(1);

  CommonArgs sim_args, sta_args, swp_args, ver_args;
  bool full_profile = false;
  std::string manifest_path;

  auto* sim = app.add_subcommand("simulate", "integrate a single trajectory");
  add_common(sim, sim_args, true);
  auto* sta = app.add_subcommand("stationary",
                                 "estimate stationary statistics (ensemble)");
  add_common(sta, sta_args, true);
  auto* swp = app.add_subcommand("sweep", "vanishing-damping gamma sweep");
  add_common(swp, swp_args, true);
  auto* ver = app.add_subcommand("verify", "run the verification suite");
  add_common(ver, ver_args, false);
  ver->add_flag("--full", full_profile,
                "full-scale acceptance profile (default: quick)");
  auto* rep = app.add_subcommand("report", "inspect and re-checksum a manifest");
  rep->add_option("manifest", manifest_path, "path to manifest.txt")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (sim->parsed()) return run_kind(fnls::ExperimentKind::simulate, sim_args, false);
  if (sta->parsed()) return run_kind(fnls::ExperimentKind::stationary, sta_args, false);
  if (swp->parsed()) return run_kind(fnls::ExperimentKind::sweep, swp_args, false);
  if (ver->parsed()) return run_kind(fnls::ExperimentKind::verify, ver_args, full_profile);
  if (rep->parsed()) return run_report(manifest_path);
  return 2;
}
