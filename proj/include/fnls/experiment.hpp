#pragma once

#include <chrono>
#include <iostream>
#include <cstdlib>
#include <ctime>
#include <optional>

#include "fnls/acceptance.hpp"
#include "fnls/report.hpp"

namespace fnls {

struct RunOverrides {
  std::optional<uint64_t> seed;
  std::string out_dir;  // overrides config and environment
  int threads = 0;
  bool quiet = false;
};

struct ExperimentResult {
  RunManifest manifest;
  std::string out_dir;
  bool verify_all_pass = true;  // meaningful for kind = verify
};

namespace detail {

inline std::string resolve_out_dir(const ExperimentConfig& cfg,
                                   const RunOverrides& ov) {
  if (!ov.out_dir.empty()) return ov.out_dir;
  if (!cfg.directory.empty()) return cfg.directory;
  if (const char* env = std::getenv("FNLSLAB_OUT"))
    if (*env) return env;
  return "out";
}

inline std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return std::string(buf);
}

inline SpectralField initial_field(const ExperimentConfig& cfg,
                                   const Basis& basis) {
  SpectralField u = zero_field(basis);
  if (cfg.initial_kind == InitialKind::single_mode)
    u.coeffs[cfg.initial_mode - 1] = cfg.initial_amplitude;
  return u;
}

inline void emit_stationary_files(const OutputSink& sink,
                                  const EnsembleStats& s,
                                  const ModelParams& params,
                                  const ExperimentConfig& cfg) {
  if (cfg.emit_summary)
    sink.write("stationary_summary.txt", stationary_summary(s, params));
  if (cfg.emit_plotdata) {
    std::vector<double> centers, counts;
    for (size_t i = 0; i < s.mass_histogram.size(); ++i) {
      centers.push_back((i + 0.5) * s.hist_max / double(s.mass_histogram.size()));
      counts.push_back(double(s.mass_histogram[i]));
    }
    sink.write("mass_histogram.dat", plotdata("mass", "count", centers, counts));
    std::vector<double> deltas, probs;
    for (const auto& pt : s.small_ball) {
      deltas.push_back(pt.delta);
      probs.push_back(pt.prob);
    }
    sink.write("small_ball.dat",
               plotdata("delta", "prob_sqrt_mass_le_delta", deltas, probs));
    std::vector<double> modes, m2;
    for (size_t j = 0; j < s.mode_second_moment.size(); ++j) {
      modes.push_back(double(j + 1));
      m2.push_back(s.mode_second_moment[j].estimate);
    }
    sink.write("mode_second_moment.dat",
               plotdata("mode", "mean_abs_coeff_sq", modes, m2));
    if (cfg.emit_svg)
      sink.write("mass_histogram.svg",
                 svg_line_plot("stationary mass histogram", centers, counts));
  }
}

}  // namespace detail

// Dispatches an experiment, writes every output through a checksummed sink
// and finishes with the run manifest.  Identical (config, seed) produce
// identical bytes everywhere except the manifest's timestamp fields.
inline ExperimentResult run_experiment(ExperimentConfig cfg,
                                       const RunOverrides& ov = {});

namespace detail {

// Two identical probe runs; byte-level comparison of everything they emit.
inline CriterionResult repro_criterion(const AcceptanceProfile& pr,
                                       const std::string& out_dir,
                                       int threads) {
  ExperimentConfig probe;
  probe.n_modes = 16;
  probe.grid_points = 16;
  probe.sigma = 1.0;
  probe.alpha = -1;
  probe.beta = 1.0;
  probe.family = NoiseFamily::flat_k;
  probe.cutoff = 4;
  probe.target_h_norm_sq = 1.0;
  probe.kind = ExperimentKind::stationary;
  probe.gamma = 0.5;
  probe.T = pr.repro_T;
  probe.burn_in = 0.25 * pr.repro_T;
  probe.n_traj = pr.repro_n_traj;
  probe.integrator.seed = pr.seed + 40;
  RunOverrides ov_a, ov_b;
  ov_a.threads = ov_b.threads = threads;
  ov_a.quiet = ov_b.quiet = true;
  ov_a.out_dir = out_dir + "/repro_a";
  ov_b.out_dir = out_dir + "/repro_b";
  const ExperimentResult a = run_experiment(probe, ov_a);
  const ExperimentResult b = run_experiment(probe, ov_b);

  bool pass = a.manifest.files.size() == b.manifest.files.size();
  std::string mismatch;
  if (pass) {
    for (size_t i = 0; i < a.manifest.files.size(); ++i) {
      const auto& fa = a.manifest.files[i];
      const auto& fb = b.manifest.files[i];
      if (fa.path != fb.path || fa.checksum != fb.checksum ||
          fa.bytes != fb.bytes) {
        pass = false;
        mismatch = fa.path;
        break;
      }
      // byte-for-byte, not just checksums
      std::ifstream ia(std::filesystem::path(ov_a.out_dir) / fa.path,
                       std::ios::binary);
      std::ifstream ib(std::filesystem::path(ov_b.out_dir) / fb.path,
                       std::ios::binary);
      std::ostringstream sa, sb;
      sa << ia.rdbuf();
      sb << ib.rdbuf();
      if (sa.str() != sb.str()) {
        pass = false;
        mismatch = fa.path;
        break;
      }
    }
  }
  std::string details =
      std::to_string(a.manifest.files.size()) +
      " data files compared byte-for-byte across two runs with seed " +
      std::to_string(probe.integrator.seed);
  if (!pass) details += "; first mismatch: " + mismatch;
  return CriterionResult{"AC10", "byte reproducibility", pass, details};
}

inline std::string verify_table(const std::vector<CriterionResult>& results,
                                VerifyProfile profile, uint64_t seed) {
  std::ostringstream out;
  out << "fnlslab-verify v" << kFormatVersion << "\n";
  out << "profile " << (profile == VerifyProfile::quick ? "quick" : "full")
      << "\n";
  out << "seed " << seed << "\n";
  bool all = true;
  for (const auto& r : results) {
    out << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << " "
        << r.name << ": " << r.details << "\n";
    all = all && r.pass;
  }
  out << "overall " << (all ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace detail

inline ExperimentResult run_experiment(ExperimentConfig cfg,
                                       const RunOverrides& ov) {
  if (ov.seed) {
    cfg.integrator.seed = *ov.seed;
    cfg.seed_explicit = true;
  }
  {
    // re-validate after overrides: run_experiment accepts built configs too
    std::vector<std::string> errors;
    build_config(parse_config_text(save_config(cfg)), errors);
    if (!errors.empty()) throw ConfigValidationError(std::move(errors));
  }
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.out_dir = detail::resolve_out_dir(cfg, ov);
  RunManifest& manifest = result.manifest;
  manifest.config_hash = config_hash(cfg);
  detail::OutputSink sink{result.out_dir, &manifest};
  std::error_code ec;
  std::filesystem::create_directories(sink.dir, ec);

  const Basis basis = build_basis_from(cfg);
  const NoiseOperator phi = build_noise(cfg);
  const HsNorms norms = hs_norms(phi, basis, cfg.beta);
  manifest.hs_norm_h_sq = norms.h_sq;
  manifest.hs_norm_v_sq = norms.v_sq;

  switch (cfg.kind) {
    case ExperimentKind::simulate: {
      const ModelParams params = build_params(cfg, cfg.gamma);
      RunOptions opts;
      opts.gn_constant = cfg.alpha == 1 ? default_gn_constant(basis, params) : 0.0;
      manifest.gn_constant = opts.gn_constant;
      const ObservableSeries s = run(detail::initial_field(cfg, basis), cfg.T,
                                     basis, params, phi, cfg.integrator, opts);
      if (cfg.emit_csv) sink.write("trajectory.csv", series_to_csv(s));
      if (cfg.emit_plotdata)
        sink.write("mass_vs_t.dat", plotdata("t", "mass", s.times, s.mass));
      if (cfg.emit_svg)
        sink.write("mass_vs_t.svg",
                   svg_line_plot("mass along the trajectory", s.times, s.mass));
      break;
    }
    case ExperimentKind::stationary: {
      const ModelParams params = build_params(cfg, cfg.gamma);
      EnsembleOptions opt;
      opt.n_traj = cfg.n_traj;
      opt.T = cfg.T;
      opt.burn_in = cfg.burn_in;
      opt.threads = ov.threads;
      const EnsembleStats s =
          ensemble_stationary(basis, params, phi, cfg.integrator, opt);
      manifest.gn_constant = s.gn_constant;
      detail::emit_stationary_files(sink, s, params, cfg);
      break;
    }
    case ExperimentKind::sweep: {
      const ModelParams params = build_params(
          cfg, cfg.gamma_list.empty() ? cfg.gamma : cfg.gamma_list.front());
      EnsembleOptions opt;
      opt.n_traj = cfg.n_traj;
      opt.T = cfg.T;
      opt.burn_in = cfg.burn_in;
      opt.threads = ov.threads;
      const SweepResult r = gamma_sweep(basis, params, phi, cfg.integrator,
                                        cfg.gamma_list, opt);
      if (cfg.emit_summary) {
        std::string text = sweep_summary(r);
        // deterministic conservation stage on the smallest-gamma samples
        const SweepEntry& smallest = r.entries.back();
        if (smallest.ok && !smallest.stats.final_states.empty() &&
            cfg.t_det > 0.0) {
          std::vector<SpectralField> samples(
              smallest.stats.final_states.begin(),
              smallest.stats.final_states.begin() +
                  std::min<size_t>(8, smallest.stats.final_states.size()));
          const ConservationReport c = limit_conservation_check(
              samples, basis, params, cfg.integrator, cfg.t_det);
          std::ostringstream extra;
          extra << "conservation max_mass_drift "
                << format_g17(c.max_mass_drift) << " mass_ok " << c.mass_ok
                << " energy_ratio " << format_g17(c.energy_order_ratio)
                << " energy_ok " << c.energy_ok << " asserted "
                << c.energy_asserted << "\n";
          text += extra.str();
        }
        sink.write("sweep_summary.txt", text);
      }
      int idx = 0;
      for (const auto& e : r.entries) {
        if (cfg.emit_summary && e.ok)
          sink.write("stats_gamma_" + std::to_string(idx) + ".txt",
                     stationary_summary(e.stats, params));
        ++idx;
      }
      if (cfg.emit_plotdata) {
        std::vector<double> gs, means, resid;
        for (const auto& e : r.entries)
          if (e.ok) {
            gs.push_back(e.gamma);
            means.push_back(e.stats.mean_mass.estimate);
            resid.push_back(e.stats.residual_mean.estimate);
          }
        sink.write("mean_mass_vs_gamma.dat",
                   plotdata("gamma", "mean_mass", gs, means));
        sink.write("residual_vs_gamma.dat",
                   plotdata("gamma", "mean_residual", gs, resid));
        if (cfg.emit_svg)
          sink.write("mean_mass_vs_gamma.svg",
                     svg_line_plot("stationary mean mass vs gamma", gs, means,
                                   true));
      }
      break;
    }
    case ExperimentKind::verify: {
      AcceptanceProfile pr = cfg.profile == VerifyProfile::full
                                 ? AcceptanceProfile::full()
                                 : AcceptanceProfile::quick();
      if (cfg.seed_explicit) pr.seed = cfg.integrator.seed;
      std::ostream* log = ov.quiet ? nullptr : &std::cerr;
      AcceptanceOutcome outcome = run_acceptance(pr, ov.threads, log);
      CriterionResult repro =
          detail::repro_criterion(pr, result.out_dir, ov.threads);
      if (log)
        (*log) << (repro.pass ? "PASS " : "FAIL ") << repro.id << " "
               << repro.name << ": " << repro.details << "\n";
      outcome.results.push_back(repro);
      std::sort(outcome.results.begin(), outcome.results.end(),
                [](const CriterionResult& a, const CriterionResult& b) {
                  return a.id < b.id;
                });
      result.verify_all_pass = true;
      for (const auto& r : outcome.results)
        result.verify_all_pass = result.verify_all_pass && r.pass;
      manifest.gn_constant = outcome.gn_constant;

      sink.write("verify_table.txt",
                 detail::verify_table(outcome.results, cfg.profile,
                                      pr.seed));
      if (cfg.emit_plotdata) {
        sink.write("mean_mass_vs_gamma.dat",
                   plotdata("gamma", "mean_mass", outcome.identity_gammas,
                            outcome.identity_means));
        sink.write("transient_mean_mass.dat",
                   plotdata("t", "mean_mass", outcome.transient.times,
                            outcome.transient.mean_mass));
        sink.write("transient_target.dat",
                   plotdata("t", "target", outcome.transient.times,
                            outcome.transient.target));
        std::vector<double> deltas, probs;
        for (const auto& pt : outcome.small_ball_curve) {
          deltas.push_back(pt.delta);
          probs.push_back(pt.prob);
        }
        sink.write("small_ball.dat",
                   plotdata("delta", "prob", deltas, probs));
        sink.write("residual_vs_gamma.dat",
                   plotdata("gamma", "mean_residual", outcome.residual_gammas,
                            outcome.residual_means));
        if (!outcome.mode_estimates.empty()) {
          std::vector<double> modes(outcome.mode_targets.size());
          for (size_t j = 0; j < modes.size(); ++j) modes[j] = double(j + 1);
          sink.write("ou_mode_moments.dat",
                     plotdata("mode", "mean_abs_coeff_sq", modes,
                              outcome.mode_estimates.front()));
          sink.write("ou_mode_targets.dat",
                     plotdata("mode", "target", modes, outcome.mode_targets));
        }
      }
      if (cfg.emit_svg && !outcome.transient.times.empty())
        sink.write("transient_mean_mass.svg",
                   svg_line_plot("E[M(t)] from zero data",
                                 outcome.transient.times,
                                 outcome.transient.mean_mass));
      break;
    }
  }

  manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  manifest.generated_at = detail::iso_timestamp();
  {
    // the manifest itself is not listed in the manifest
    detail::OutputSink plain{result.out_dir, nullptr};
    plain.write("manifest.txt", manifest_to_text(manifest));
  }
  return result;
}

}  // namespace fnls
