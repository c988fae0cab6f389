#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fnls/basis.hpp"
#include "fnls/params.hpp"

namespace fnls {

// Diagonal noise operator Phi: the forcing is
//   Phi dW = sum_j (phi_j dW_j + i phi_{-j} dW_{-j}) e_j
// with real amplitudes phi_j (phi_plus) and phi_{-j} (phi_minus).
struct NoiseOperator {
  std::vector<double> phi_plus;
  std::vector<double> phi_minus;
};

struct HsNorms {
  double h_sq = 0.0;  // ||Phi||^2_{HS(Y,H)} = sum (phi_j^2 + phi_{-j}^2)
  double v_sq = 0.0;  // ||Phi||^2_{HS(Y,V)} = sum (1 + lambda_j^beta)(...)
};

inline void check_noise(const NoiseOperator& phi, const Basis& b) {
  if (int(phi.phi_plus.size()) != b.n_modes ||
      int(phi.phi_minus.size()) != b.n_modes)
    throw std::invalid_argument("noise operator length does not match basis n_modes");
}

inline HsNorms hs_norms(const NoiseOperator& phi, const Basis& b, double beta) {
  check_noise(phi, b);
  HsNorms out;
  for (int j = 0; j < b.n_modes; ++j) {
    const double s = phi.phi_plus[j] * phi.phi_plus[j] +
                     phi.phi_minus[j] * phi.phi_minus[j];
    out.h_sq += s;
    out.v_sq += (1.0 + std::pow(b.eigenvalues[j], beta)) * s;
  }
  return out;
}

// P_n Phi: keep the first n amplitudes, zero the rest.
inline NoiseOperator truncate(const NoiseOperator& phi, int n) {
  NoiseOperator out = phi;
  for (int j = n; j < int(out.phi_plus.size()); ++j) {
    out.phi_plus[j] = 0.0;
    out.phi_minus[j] = 0.0;
  }
  return out;
}

inline bool is_zero(const NoiseOperator& phi) {
  for (double v : phi.phi_plus)
    if (v != 0.0) return false;
  for (double v : phi.phi_minus)
    if (v != 0.0) return false;
  return true;
}

inline bool is_isotropic(const NoiseOperator& phi) {
  for (size_t j = 0; j < phi.phi_plus.size(); ++j)
    if (phi.phi_plus[j] != phi.phi_minus[j]) return false;
  return true;
}

// phi_alpha(d, beta, sigma, gamma, Phi) =
//   ||Phi||^2_V + ||Phi||^{2+2 sigma}_V gamma^{-sigma}
//   + 1_{alpha=1} ||Phi||^{2+4 beta sigma/(2 beta - sigma d)}_H
//                 gamma^{-2 beta sigma/(2 beta - sigma d)}
// Used to form the theoretical energy-moment envelopes.
inline double phi_alpha_from_norms(const ModelParams& p, double h_sq,
                                   double v_sq, double gamma_eff) {
  if (!(gamma_eff > 0.0))
    throw std::invalid_argument("phi_alpha: gamma_eff must be > 0");
  const double d = double(ModelParams::dimension);
  double out =
      v_sq + std::pow(v_sq, 1.0 + p.sigma) * std::pow(gamma_eff, -p.sigma);
  if (p.alpha == 1) {
    const double q = 2.0 * p.beta * p.sigma / (2.0 * p.beta - p.sigma * d);
    out += std::pow(h_sq, 1.0 + q) * std::pow(gamma_eff, -q);
  }
  return out;
}

inline double phi_alpha_bound(const ModelParams& p, const NoiseOperator& phi,
                              const Basis& b, double gamma_eff) {
  const HsNorms ns = hs_norms(phi, b, p.beta);
  return phi_alpha_from_norms(p, ns.h_sq, ns.v_sq, gamma_eff);
}

// Spectrum families used by the config layer.

// phi_j = phi_{-j} = c for j <= k, 0 beyond.
inline NoiseOperator flat_k_noise(int n_modes, int cutoff, double amplitude) {
  if (cutoff < 0 || cutoff > n_modes)
    throw std::invalid_argument("flat_k_noise: cutoff must be in [0, n_modes]");
  NoiseOperator phi;
  phi.phi_plus.assign(n_modes, 0.0);
  phi.phi_minus.assign(n_modes, 0.0);
  for (int j = 0; j < cutoff; ++j) {
    phi.phi_plus[j] = amplitude;
    phi.phi_minus[j] = amplitude;
  }
  return phi;
}

// phi_j = phi_{-j} = amplitude * j^{-p} for j <= cutoff.
inline NoiseOperator power_decay_noise(int n_modes, int cutoff, double p,
                                       double amplitude = 1.0) {
  if (cutoff < 0 || cutoff > n_modes)
    throw std::invalid_argument("power_decay_noise: cutoff must be in [0, n_modes]");
  NoiseOperator phi;
  phi.phi_plus.assign(n_modes, 0.0);
  phi.phi_minus.assign(n_modes, 0.0);
  for (int j = 0; j < cutoff; ++j) {
    const double v = amplitude * std::pow(double(j + 1), -p);
    phi.phi_plus[j] = v;
    phi.phi_minus[j] = v;
  }
  return phi;
}

inline NoiseOperator zero_noise(int n_modes) {
  NoiseOperator phi;
  phi.phi_plus.assign(n_modes, 0.0);
  phi.phi_minus.assign(n_modes, 0.0);
  return phi;
}

// Rescale amplitudes so that ||Phi||^2_{HS(Y,H)} equals target.
inline void rescale_h_norm(NoiseOperator& phi, double target_h_sq) {
  double s = 0.0;
  for (size_t j = 0; j < phi.phi_plus.size(); ++j)
    s += phi.phi_plus[j] * phi.phi_plus[j] +
         phi.phi_minus[j] * phi.phi_minus[j];
  if (!(s > 0.0))
    throw std::invalid_argument("rescale_h_norm: noise operator is zero");
  const double f = std::sqrt(target_h_sq / s);
  for (auto& v : phi.phi_plus) v *= f;
  for (auto& v : phi.phi_minus) v *= f;
}

// c_Phi of the small-ball bound: min of the two largest phi^2 over distinct
// entries (the sharpest admissible pair).
inline double small_ball_c_phi(const NoiseOperator& phi) {
  std::vector<double> sq;
  sq.reserve(phi.phi_plus.size() + phi.phi_minus.size());
  for (double v : phi.phi_plus) sq.push_back(v * v);
  for (double v : phi.phi_minus) sq.push_back(v * v);
  std::sort(sq.begin(), sq.end(), std::greater<double>());
  if (sq.size() < 2 || sq[1] <= 0.0)
    throw std::invalid_argument(
        "small_ball_c_phi: need at least two nonzero noise coefficients");
  return sq[1];
}

}  // namespace fnls
