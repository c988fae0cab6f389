#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fnls/basis.hpp"
#include "fnls/checksum.hpp"
#include "fnls/integrator.hpp"
#include "fnls/noise.hpp"
#include "fnls/params.hpp"
#include "fnls/version.hpp"

namespace fnls {

// Experiment configuration: a flat `section.key = value` text format
// (see docs/FORMATS.md).  Loading validates everything and reports the
// complete list of violations, not just the first.

enum class ExperimentKind { simulate, stationary, sweep, verify };
enum class NoiseFamily { flat_k, power_decay, custom, none };
enum class InitialKind { zero, single_mode };
enum class VerifyProfile { quick, full };

struct ExperimentConfig {
  // model
  double length = 3.14159265358979323846264338327950288;
  int n_modes = 32;
  int grid_points = -1;  // -1: equal to n_modes
  double sigma = 1.0;
  int alpha = -1;
  double beta = 1.0;
  // noise
  NoiseFamily family = NoiseFamily::flat_k;
  int cutoff = -1;  // -1: n_modes
  double amplitude = 1.0;
  double exponent = 2.0;              // power_decay p
  double target_h_norm_sq = -1.0;     // < 0: no rescaling
  std::vector<double> phi_plus;       // custom
  std::vector<double> phi_minus;      // custom
  // integrator
  IntegratorConfig integrator;
  // experiment
  ExperimentKind kind = ExperimentKind::stationary;
  double gamma = 0.5;
  std::vector<double> gamma_list;
  double T = 100.0;
  double burn_in = -1.0;  // -1: default max(10/gamma, 50)
  int n_traj = 64;
  double t_det = 50.0;  // sweep: deterministic conservation horizon
  // initial data (simulate)
  InitialKind initial_kind = InitialKind::zero;
  int initial_mode = 1;
  double initial_amplitude = 1.0;
  // output
  std::string directory;  // empty: $FNLSLAB_OUT or "out"
  bool emit_csv = true;
  bool emit_summary = true;
  bool emit_plotdata = true;
  bool emit_svg = false;
  // verify
  VerifyProfile profile = VerifyProfile::quick;
  // set when integrator.seed came from the file or a CLI override; verify
  // falls back to its pinned fixture seed otherwise
  bool seed_explicit = false;
};

struct ConfigParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigValidationError : std::runtime_error {
  std::vector<std::string> errors;
  explicit ConfigValidationError(std::vector<std::string> errs)
      : std::runtime_error("invalid configuration (" +
                           std::to_string(errs.size()) + " error(s))"),
        errors(std::move(errs)) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// key -> value; throws ConfigParseError on malformed lines or duplicates.
inline std::map<std::string, std::string> parse_config_text(
    const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": expected `key = value`");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigParseError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key))
      throw ConfigParseError("line " + std::to_string(lineno) +
                             ": duplicate key `" + key + "`");
    kv[key] = value;
  }
  return kv;
}

namespace detail {

struct FieldReader {
  const std::map<std::string, std::string>& kv;
  std::vector<std::string>& errors;
  std::vector<std::string> seen;

  const std::string* get(const std::string& key) {
    seen.push_back(key);
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  }
  void number(const std::string& key, double& out) {
    if (const std::string* v = get(key)) {
      char* end = nullptr;
      const double x = std::strtod(v->c_str(), &end);
      if (end == v->c_str() || *end != '\0')
        errors.push_back(key + ": not a number (`" + *v + "`)");
      else
        out = x;
    }
  }
  void integer(const std::string& key, int& out) {
    if (const std::string* v = get(key)) {
      char* end = nullptr;
      const long x = std::strtol(v->c_str(), &end, 10);
      if (end == v->c_str() || *end != '\0')
        errors.push_back(key + ": not an integer (`" + *v + "`)");
      else
        out = int(x);
    }
  }
  void u64(const std::string& key, uint64_t& out) {
    if (const std::string* v = get(key)) {
      char* end = nullptr;
      const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
      if (end == v->c_str() || *end != '\0')
        errors.push_back(key + ": not an unsigned integer (`" + *v + "`)");
      else
        out = uint64_t(x);
    }
  }
  void number_list(const std::string& key, std::vector<double>& out) {
    if (const std::string* v = get(key)) {
      out.clear();
      for (const std::string& item : split_list(*v)) {
        char* end = nullptr;
        const double x = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') {
          errors.push_back(key + ": not a number list (`" + *v + "`)");
          return;
        }
        out.push_back(x);
      }
    }
  }
  void onoff(const std::string& key, bool& out) {
    if (const std::string* v = get(key)) {
      if (*v == "on")
        out = true;
      else if (*v == "off")
        out = false;
      else
        errors.push_back(key + ": expected on|off (`" + *v + "`)");
    }
  }
  template <class T>
  void choice(const std::string& key, T& out,
              std::initializer_list<std::pair<const char*, T>> values) {
    if (const std::string* v = get(key)) {
      for (const auto& [name, val] : values)
        if (*v == name) {
          out = val;
          return;
        }
      std::string opts;
      for (const auto& [name, val] : values) {
        if (!opts.empty()) opts += "|";
        opts += name;
      }
      errors.push_back(key + ": expected " + opts + " (`" + *v + "`)");
    }
  }
};

}  // namespace detail

inline NoiseOperator build_noise(const ExperimentConfig& cfg) {
  const int n = cfg.n_modes;
  const int cut = cfg.cutoff < 0 ? n : cfg.cutoff;
  NoiseOperator phi;
  switch (cfg.family) {
    case NoiseFamily::flat_k:
      phi = flat_k_noise(n, cut, cfg.amplitude);
      break;
    case NoiseFamily::power_decay:
      phi = power_decay_noise(n, cut, cfg.exponent, cfg.amplitude);
      break;
    case NoiseFamily::custom: {
      phi = zero_noise(n);
      for (size_t j = 0; j < cfg.phi_plus.size() && int(j) < n; ++j)
        phi.phi_plus[j] = cfg.phi_plus[j];
      for (size_t j = 0; j < cfg.phi_minus.size() && int(j) < n; ++j)
        phi.phi_minus[j] = cfg.phi_minus[j];
      break;
    }
    case NoiseFamily::none:
      phi = zero_noise(n);
      break;
  }
  if (cfg.target_h_norm_sq >= 0.0 && !is_zero(phi))
    rescale_h_norm(phi, cfg.target_h_norm_sq);
  return phi;
}

inline Basis build_basis_from(const ExperimentConfig& cfg) {
  return build_basis(cfg.length, cfg.n_modes,
                     cfg.grid_points < 0 ? cfg.n_modes : cfg.grid_points);
}

inline ModelParams build_params(const ExperimentConfig& cfg, double gamma) {
  ModelParams p;
  p.sigma = cfg.sigma;
  p.alpha = cfg.alpha;
  p.beta = cfg.beta;
  p.gamma = gamma;
  return p;
}

// Builds and validates; collects every violation with its field path.
inline ExperimentConfig build_config(const std::map<std::string, std::string>& kv,
                                     std::vector<std::string>& errors) {
  ExperimentConfig cfg;
  detail::FieldReader rd{kv, errors, {}};

  int format_version = kFormatVersion;
  rd.integer("format_version", format_version);
  if (format_version > kFormatVersion)
    errors.push_back("format_version: newer than supported (" +
                     std::to_string(format_version) + " > " +
                     std::to_string(kFormatVersion) + ")");

  rd.number("model.length", cfg.length);
  rd.integer("model.n_modes", cfg.n_modes);
  rd.integer("model.grid_points", cfg.grid_points);
  rd.number("model.sigma", cfg.sigma);
  rd.integer("model.alpha", cfg.alpha);
  rd.number("model.beta", cfg.beta);

  rd.choice("noise.family", cfg.family,
            {{"flat_k", NoiseFamily::flat_k},
             {"power_decay", NoiseFamily::power_decay},
             {"custom", NoiseFamily::custom},
             {"none", NoiseFamily::none}});
  rd.integer("noise.cutoff", cfg.cutoff);
  rd.number("noise.amplitude", cfg.amplitude);
  rd.number("noise.exponent", cfg.exponent);
  rd.number("noise.target_h_norm_sq", cfg.target_h_norm_sq);
  rd.number_list("noise.phi_plus", cfg.phi_plus);
  rd.number_list("noise.phi_minus", cfg.phi_minus);

  rd.number("integrator.dt", cfg.integrator.dt);
  rd.choice("integrator.scheme", cfg.integrator.scheme,
            {{"strang_split", SplitScheme::strang_split},
             {"lie_split", SplitScheme::lie_split}});
  rd.u64("integrator.seed", cfg.integrator.seed);
  cfg.seed_explicit = kv.count("integrator.seed") > 0;
  rd.integer("integrator.record_every", cfg.integrator.record_every);
  rd.onoff("integrator.nonlinearity", cfg.integrator.nonlinearity);
  rd.choice("integrator.linear_update", cfg.integrator.linear_update,
            {{"em", LinearUpdate::em}, {"exact_ou", LinearUpdate::exact_ou}});

  rd.choice("experiment.kind", cfg.kind,
            {{"simulate", ExperimentKind::simulate},
             {"stationary", ExperimentKind::stationary},
             {"sweep", ExperimentKind::sweep},
             {"verify", ExperimentKind::verify}});
  rd.number("experiment.gamma", cfg.gamma);
  rd.number_list("experiment.gamma_list", cfg.gamma_list);
  rd.number("experiment.T", cfg.T);
  rd.number("experiment.burn_in", cfg.burn_in);
  rd.integer("experiment.n_traj", cfg.n_traj);
  rd.number("experiment.t_det", cfg.t_det);

  rd.choice("initial.kind", cfg.initial_kind,
            {{"zero", InitialKind::zero},
             {"single_mode", InitialKind::single_mode}});
  rd.integer("initial.mode", cfg.initial_mode);
  rd.number("initial.amplitude", cfg.initial_amplitude);

  if (const std::string* v = rd.get("output.directory")) cfg.directory = *v;
  if (const std::string* v = rd.get("output.formats")) {
    cfg.emit_csv = cfg.emit_summary = cfg.emit_plotdata = cfg.emit_svg = false;
    for (const std::string& f : detail::split_list(*v)) {
      if (f == "csv")
        cfg.emit_csv = true;
      else if (f == "summary")
        cfg.emit_summary = true;
      else if (f == "plotdata")
        cfg.emit_plotdata = true;
      else if (f == "svg")
        cfg.emit_svg = true;
      else
        errors.push_back("output.formats: unknown format `" + f + "`");
    }
  }
  rd.choice("verify.profile", cfg.profile,
            {{"quick", VerifyProfile::quick}, {"full", VerifyProfile::full}});

  // unknown keys
  for (const auto& [key, value] : kv)
    if (std::find(rd.seen.begin(), rd.seen.end(), key) == rd.seen.end())
      errors.push_back(key + ": unknown key");

  // domain validation
  if (!(cfg.length > 0.0)) errors.push_back("model.length: must be > 0");
  if (cfg.n_modes < 1) errors.push_back("model.n_modes: must be >= 1");
  if (cfg.grid_points >= 0 && cfg.grid_points < cfg.n_modes)
    errors.push_back("model.grid_points: must be >= model.n_modes");
  {
    ModelParams p = build_params(cfg, std::max(cfg.gamma, 0.0));
    for (const std::string& e : validate(p)) errors.push_back("model: " + e);
  }
  if (cfg.cutoff >= 0 && cfg.cutoff > cfg.n_modes)
    errors.push_back("noise.cutoff: must be <= model.n_modes");
  if (cfg.family == NoiseFamily::power_decay &&
      !(2.0 * cfg.exponent - 2.0 * cfg.beta > 1.0))
    errors.push_back(
        "noise.exponent: power_decay requires 2p - 2 beta > 1 "
        "(V-norm summability margin)");
  if (cfg.family == NoiseFamily::custom &&
      (int(cfg.phi_plus.size()) > cfg.n_modes ||
       int(cfg.phi_minus.size()) > cfg.n_modes))
    errors.push_back("noise.phi_plus/phi_minus: more entries than model.n_modes");
  if (cfg.target_h_norm_sq >= 0.0 && cfg.family == NoiseFamily::none)
    errors.push_back("noise.target_h_norm_sq: cannot rescale the zero operator");

  if (!(cfg.integrator.dt > 0.0)) errors.push_back("integrator.dt: must be > 0");
  if (cfg.integrator.record_every < 1)
    errors.push_back("integrator.record_every: must be >= 1");
  if (cfg.integrator.linear_update == LinearUpdate::exact_ou && errors.empty()) {
    if (!is_isotropic(build_noise(cfg)))
      errors.push_back(
          "integrator.linear_update: exact_ou requires isotropic noise");
  }

  if (!(cfg.T >= cfg.integrator.dt))
    errors.push_back("experiment.T: must be at least one time step");
  if (cfg.burn_in >= 0.0 && !(cfg.burn_in < cfg.T))
    errors.push_back("experiment.burn_in: must be < experiment.T");
  if (!(cfg.gamma >= 0.0)) errors.push_back("experiment.gamma: must be >= 0");
  const bool needs_ensemble = cfg.kind == ExperimentKind::stationary ||
                              cfg.kind == ExperimentKind::sweep;
  if (needs_ensemble && cfg.n_traj < 2)
    errors.push_back("experiment.n_traj: must be >= 2 for ensemble experiments");
  if (cfg.kind == ExperimentKind::stationary && !(cfg.gamma > 0.0))
    errors.push_back("experiment.gamma: must be > 0 for stationary estimation");
  if (cfg.kind == ExperimentKind::sweep) {
    if (cfg.gamma_list.empty())
      errors.push_back("experiment.gamma_list: required for sweep");
    for (size_t i = 0; i < cfg.gamma_list.size(); ++i) {
      if (!(cfg.gamma_list[i] > 0.0))
        errors.push_back("experiment.gamma_list: entries must be > 0");
      if (i > 0 && !(cfg.gamma_list[i] < cfg.gamma_list[i - 1]))
        errors.push_back("experiment.gamma_list: must be strictly decreasing");
    }
  }
  if (cfg.kind == ExperimentKind::simulate && cfg.gamma == 0.0 &&
      cfg.family != NoiseFamily::none) {
    NoiseOperator phi = errors.empty() ? build_noise(cfg) : NoiseOperator{};
    if (!errors.empty() || !is_zero(phi))
      errors.push_back(
          "experiment.gamma: gamma = 0 is deterministic mode and requires "
          "noise.family = none");
  }
  if (cfg.initial_mode < 1 || cfg.initial_mode > cfg.n_modes)
    errors.push_back("initial.mode: must be in [1, model.n_modes]");
  if (!(cfg.t_det >= 0.0)) errors.push_back("experiment.t_det: must be >= 0");

  return cfg;
}

inline std::string format_g17(double v) {
  char buf[32];
  snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

// Canonical serialization; load(save(cfg)) reproduces cfg exactly.
inline std::string save_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "format_version = " << kFormatVersion << "\n";
  out << "model.length = " << format_g17(cfg.length) << "\n";
  out << "model.n_modes = " << cfg.n_modes << "\n";
  if (cfg.grid_points >= 0)
    out << "model.grid_points = " << cfg.grid_points << "\n";
  out << "model.sigma = " << format_g17(cfg.sigma) << "\n";
  out << "model.alpha = " << cfg.alpha << "\n";
  out << "model.beta = " << format_g17(cfg.beta) << "\n";
  const char* fam = cfg.family == NoiseFamily::flat_k        ? "flat_k"
                    : cfg.family == NoiseFamily::power_decay ? "power_decay"
                    : cfg.family == NoiseFamily::custom      ? "custom"
                                                             : "none";
  out << "noise.family = " << fam << "\n";
  if (cfg.cutoff >= 0) out << "noise.cutoff = " << cfg.cutoff << "\n";
  out << "noise.amplitude = " << format_g17(cfg.amplitude) << "\n";
  out << "noise.exponent = " << format_g17(cfg.exponent) << "\n";
  if (cfg.target_h_norm_sq >= 0.0)
    out << "noise.target_h_norm_sq = " << format_g17(cfg.target_h_norm_sq)
        << "\n";
  auto list = [&](const char* key, const std::vector<double>& xs) {
    if (xs.empty()) return;
    out << key << " = ";
    for (size_t i = 0; i < xs.size(); ++i)
      out << (i ? "," : "") << format_g17(xs[i]);
    out << "\n";
  };
  list("noise.phi_plus", cfg.phi_plus);
  list("noise.phi_minus", cfg.phi_minus);
  out << "integrator.dt = " << format_g17(cfg.integrator.dt) << "\n";
  out << "integrator.scheme = "
      << (cfg.integrator.scheme == SplitScheme::strang_split ? "strang_split"
                                                             : "lie_split")
      << "\n";
  out << "integrator.seed = " << cfg.integrator.seed << "\n";
  out << "integrator.record_every = " << cfg.integrator.record_every << "\n";
  out << "integrator.nonlinearity = "
      << (cfg.integrator.nonlinearity ? "on" : "off") << "\n";
  out << "integrator.linear_update = "
      << (cfg.integrator.linear_update == LinearUpdate::em ? "em" : "exact_ou")
      << "\n";
  const char* kind = cfg.kind == ExperimentKind::simulate     ? "simulate"
                     : cfg.kind == ExperimentKind::stationary ? "stationary"
                     : cfg.kind == ExperimentKind::sweep      ? "sweep"
                                                              : "verify";
  out << "experiment.kind = " << kind << "\n";
  out << "experiment.gamma = " << format_g17(cfg.gamma) << "\n";
  list("experiment.gamma_list", cfg.gamma_list);
  out << "experiment.T = " << format_g17(cfg.T) << "\n";
  if (cfg.burn_in >= 0.0)
    out << "experiment.burn_in = " << format_g17(cfg.burn_in) << "\n";
  out << "experiment.n_traj = " << cfg.n_traj << "\n";
  out << "experiment.t_det = " << format_g17(cfg.t_det) << "\n";
  out << "initial.kind = "
      << (cfg.initial_kind == InitialKind::zero ? "zero" : "single_mode")
      << "\n";
  out << "initial.mode = " << cfg.initial_mode << "\n";
  out << "initial.amplitude = " << format_g17(cfg.initial_amplitude) << "\n";
  if (!cfg.directory.empty())
    out << "output.directory = " << cfg.directory << "\n";
  std::string formats;
  if (cfg.emit_csv) formats += "csv";
  if (cfg.emit_summary) formats += formats.empty() ? "summary" : ",summary";
  if (cfg.emit_plotdata) formats += formats.empty() ? "plotdata" : ",plotdata";
  if (cfg.emit_svg) formats += formats.empty() ? "svg" : ",svg";
  out << "output.formats = " << formats << "\n";
  out << "verify.profile = "
      << (cfg.profile == VerifyProfile::quick ? "quick" : "full") << "\n";
  return out.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  return fnv1a64_hex(save_config(cfg));
}

inline ExperimentConfig load_config_text(const std::string& text) {
  const auto kv = parse_config_text(text);
  std::vector<std::string> errors;
  ExperimentConfig cfg = build_config(kv, errors);
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

}  // namespace fnls
