#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fnls/checksum.hpp"
#include "fnls/config.hpp"
#include "fnls/integrator.hpp"
#include "fnls/stationary.hpp"
#include "fnls/version.hpp"

namespace fnls {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ManifestFile {
  std::string path;  // relative to the output directory
  std::string checksum;
  size_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  std::string code_version = kVersion;
  double wall_time_seconds = 0.0;
  std::string generated_at;  // timestamp; excluded from reproducibility
  double gn_constant = 0.0;
  double hs_norm_h_sq = 0.0;
  double hs_norm_v_sq = 0.0;
  std::vector<ManifestFile> files;
};

namespace detail {

// All output files are written through this sink so the manifest can record
// a checksum for every byte that leaves the process.
struct OutputSink {
  std::filesystem::path dir;
  RunManifest* manifest = nullptr;

  void write(const std::string& relpath, const std::string& content) const {
    const std::filesystem::path full = dir / relpath;
    std::error_code ec;
    std::filesystem::create_directories(full.parent_path(), ec);
    std::ofstream out(full, std::ios::binary);
    if (!out) throw IoError("cannot write output file: " + full.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw IoError("short write on output file: " + full.string());
    if (manifest)
      manifest->files.push_back(
          ManifestFile{relpath, fnv1a64_hex(content), content.size()});
  }
};

}  // namespace detail

// --- observable series CSV (17 significant digits, lossless) ---

inline std::string series_to_csv(const ObservableSeries& s) {
  std::ostringstream out;
  out << "t,mass,energy,modified_energy,v_norm_sq,residual_h\n";
  for (size_t i = 0; i < s.times.size(); ++i)
    out << format_g17(s.times[i]) << ',' << format_g17(s.mass[i]) << ','
        << format_g17(s.energy[i]) << ',' << format_g17(s.modified_energy[i])
        << ',' << format_g17(s.v_norm_sq[i]) << ','
        << format_g17(s.residual_h[i]) << "\n";
  return out.str();
}

inline ObservableSeries series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "t,mass,energy,modified_energy,v_norm_sq,residual_h")
    throw IoError("observable CSV: unexpected header");
  ObservableSeries s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[6];
    const char* p = line.c_str();
    for (int i = 0; i < 6; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(p, &end);
      if (end == p || (i < 5 && *end != ',') || (i == 5 && *end != '\0'))
        throw IoError("observable CSV: malformed row `" + line + "`");
      p = end + (i < 5 ? 1 : 0);
    }
    s.times.push_back(v[0]);
    s.mass.push_back(v[1]);
    s.energy.push_back(v[2]);
    s.modified_energy.push_back(v[3]);
    s.v_norm_sq.push_back(v[4]);
    s.residual_h.push_back(v[5]);
  }
  return s;
}

// --- two-column plot data ---

inline std::string plotdata(const std::string& xlabel, const std::string& ylabel,
                            const std::vector<double>& x,
                            const std::vector<double>& y) {
  std::ostringstream out;
  out << "# fnlslab-plotdata v" << kFormatVersion << "\n";
  out << "# " << xlabel << " " << ylabel << "\n";
  for (size_t i = 0; i < x.size(); ++i)
    out << format_g17(x[i]) << ' ' << format_g17(y[i]) << "\n";
  return out.str();
}

// Standalone SVG line plot, no external dependencies.
inline std::string svg_line_plot(const std::string& title,
                                 const std::vector<double>& x,
                                 const std::vector<double>& y,
                                 bool log_x = false) {
  const int W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::vector<double> xs = x;
  if (log_x)
    for (double& v : xs) v = std::log10(v);
  for (double v : xs) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (double v : y) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double v) {
    return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double v) {
    return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb);
  };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  char buf[64];
  snprintf(buf, sizeof buf, "%.4g", log_x ? std::pow(10.0, xmin) : xmin);
  out << "<text x=\"" << ml << "\" y=\"" << H - mb + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf
      << "</text>\n";
  snprintf(buf, sizeof buf, "%.4g", log_x ? std::pow(10.0, xmax) : xmax);
  out << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << buf << "</text>\n";
  snprintf(buf, sizeof buf, "%.4g", ymin);
  out << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << buf << "</text>\n";
  snprintf(buf, sizeof buf, "%.4g", ymax);
  out << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">"
      << buf << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
         "points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    snprintf(buf, sizeof buf, "%.2f,%.2f ", px(xs[i]), py(y[i]));
    out << buf;
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

// --- summaries ---

inline std::string stationary_summary(const EnsembleStats& s,
                                      const ModelParams& params) {
  std::ostringstream out;
  out << "fnlslab-summary v" << kFormatVersion << "\n";
  out << "kind stationary\n";
  out << "gamma " << format_g17(s.gamma) << "\n";
  out << "n_traj " << s.n_traj << "\n";
  out << "samples_per_traj " << s.samples_per_traj << "\n";
  out << "hs_norm_h_sq " << format_g17(s.phi_norms.h_sq) << "\n";
  out << "hs_norm_v_sq " << format_g17(s.phi_norms.v_sq) << "\n";
  out << "gn_constant " << format_g17(s.gn_constant) << "\n";
  const double target = 0.5 * s.phi_norms.h_sq;
  out << "target_mean_mass " << format_g17(target) << "\n";
  out << "mean_mass " << format_g17(s.mean_mass.estimate) << " se "
      << format_g17(s.mean_mass.se) << "\n";
  const double phi_a =
      s.phi_norms.h_sq > 0.0
          ? phi_alpha_from_norms(params, s.phi_norms.h_sq, s.phi_norms.v_sq, 1.0)
          : 0.0;
  for (int p = 0; p < 3; ++p) {
    const double env = kMassEnvelopeC[p] * std::pow(s.phi_norms.h_sq, p + 1);
    out << "mass_moment p=" << p + 1 << " "
        << format_g17(s.mass_moments[p].estimate) << " se "
        << format_g17(s.mass_moments[p].se) << " envelope " << format_g17(env)
        << " pass " << (s.mass_moments[p].estimate <= env ? 1 : 0) << "\n";
  }
  for (int p = 0; p < 3; ++p) {
    const double env = std::pow(kEnergyEnvelopeC * phi_a, p + 1);
    out << "energy_moment p=" << p + 1 << " "
        << format_g17(s.energy_moments[p].estimate) << " se "
        << format_g17(s.energy_moments[p].se) << " envelope "
        << format_g17(env) << " pass "
        << (phi_a == 0.0 || s.energy_moments[p].estimate <= env ? 1 : 0)
        << "\n";
  }
  out << "stationarity_z " << format_g17(s.stationarity_z) << " pass "
      << (s.stationary_ok ? 1 : 0) << "\n";
  out << "residual_mean " << format_g17(s.residual_mean.estimate) << " se "
      << format_g17(s.residual_mean.se) << "\n";
  out << "residual_p95 " << format_g17(s.residual_p95) << "\n";
  const double z = s.mean_mass.se > 0.0
                       ? (s.mean_mass.estimate - target) / s.mean_mass.se
                       : 0.0;
  out << "mass_identity_z " << format_g17(z) << " pass "
      << (std::abs(z) <= 3.0 ? 1 : 0) << "\n";
  return out.str();
}

inline std::string sweep_summary(const SweepResult& r) {
  std::ostringstream out;
  out << "fnlslab-sweep-summary v" << kFormatVersion << "\n";
  out << "n_gamma " << r.gamma_values.size() << "\n";
  out << "columns gamma mean_mass se target pass residual_mean residual_se "
         "residual_p95\n";
  for (const auto& e : r.entries) {
    if (!e.ok) {
      out << "row " << format_g17(e.gamma) << " failed: " << e.error << "\n";
      continue;
    }
    const double target = 0.5 * e.stats.phi_norms.h_sq;
    out << "row " << format_g17(e.gamma) << " "
        << format_g17(e.stats.mean_mass.estimate) << " "
        << format_g17(e.stats.mean_mass.se) << " " << format_g17(target) << " "
        << (e.mass_identity_ok ? 1 : 0) << " "
        << format_g17(e.stats.residual_mean.estimate) << " "
        << format_g17(e.stats.residual_mean.se) << " "
        << format_g17(e.stats.residual_p95) << "\n";
  }
  out << "residual_exponent " << format_g17(r.residual_exponent) << " se "
      << format_g17(r.residual_exponent_se) << " label artifact-derived\n";
  out << "ks_smallest_vs_largest " << format_g17(r.ks_smallest_vs_largest)
      << "\n";
  return out.str();
}

// --- manifest ---

inline std::string manifest_to_text(const RunManifest& m) {
  std::ostringstream out;
  out << "fnlslab-manifest v" << kFormatVersion << "\n";
  out << "code_version " << m.code_version << "\n";
  out << "config_hash " << m.config_hash << "\n";
  out << "wall_time_seconds " << format_g17(m.wall_time_seconds) << "\n";
  out << "generated_at " << m.generated_at << "\n";
  out << "gn_constant " << format_g17(m.gn_constant) << "\n";
  out << "hs_norm_h_sq " << format_g17(m.hs_norm_h_sq) << "\n";
  out << "hs_norm_v_sq " << format_g17(m.hs_norm_v_sq) << "\n";
  for (const auto& f : m.files)
    out << "file " << f.path << " " << f.checksum << " " << f.bytes << "\n";
  return out.str();
}

inline RunManifest manifest_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("fnlslab-manifest v", 0) != 0)
    throw IoError("not a fnlslab manifest");
  const int version = std::atoi(line.c_str() + 18);
  if (version > kFormatVersion)
    throw IoError("manifest format is newer than supported");
  RunManifest m;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "code_version")
      ls >> m.code_version;
    else if (key == "config_hash")
      ls >> m.config_hash;
    else if (key == "wall_time_seconds")
      ls >> m.wall_time_seconds;
    else if (key == "generated_at")
      ls >> m.generated_at;
    else if (key == "gn_constant")
      ls >> m.gn_constant;
    else if (key == "hs_norm_h_sq")
      ls >> m.hs_norm_h_sq;
    else if (key == "hs_norm_v_sq")
      ls >> m.hs_norm_v_sq;
    else if (key == "file") {
      ManifestFile f;
      ls >> f.path >> f.checksum >> f.bytes;
      m.files.push_back(f);
    }
  }
  return m;
}

// Re-checksums every listed file; returns the mismatches.
inline std::vector<std::string> verify_manifest(const RunManifest& m,
                                                const std::string& dir) {
  std::vector<std::string> problems;
  for (const auto& f : m.files) {
    const std::filesystem::path p = std::filesystem::path(dir) / f.path;
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      problems.push_back(f.path + ": missing");
      continue;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();
    if (content.size() != f.bytes)
      problems.push_back(f.path + ": size mismatch");
    else if (fnv1a64_hex(content) != f.checksum)
      problems.push_back(f.path + ": checksum mismatch");
  }
  return problems;
}

}  // namespace fnls
