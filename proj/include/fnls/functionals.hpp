#pragma once

#include <cmath>
#include <stdexcept>

#include "fnls/basis.hpp"
#include "fnls/params.hpp"

namespace fnls {

// (u, v)_H in coefficients
inline cplx inner_product(const SpectralField& u, const SpectralField& v) {
  if (u.coeffs.size() != v.coeffs.size())
    throw std::invalid_argument("inner_product: dimension mismatch");
  cplx s(0.0, 0.0);
  for (size_t j = 0; j < u.coeffs.size(); ++j)
    s += u.coeffs[j] * std::conj(v.coeffs[j]);
  return s;
}

// M(u) = sum |c_j|^2
inline double mass(const SpectralField& u) {
  double s = 0.0;
  for (const cplx& c : u.coeffs) s += std::norm(c);
  return s;
}

// ||u||^2_V = sum (1 + lambda_j^beta) |c_j|^2
inline double v_norm_sq(const SpectralField& u, const Basis& b, double beta) {
  check_field(u, b, "v_norm_sq");
  double s = 0.0;
  for (int j = 0; j < b.n_modes; ++j)
    s += (1.0 + std::pow(b.eigenvalues[j], beta)) * std::norm(u.coeffs[j]);
  return s;
}

// A u = (-Laplace)^beta u: c_j -> lambda_j^beta c_j
inline SpectralField apply_A(const SpectralField& u, const Basis& b,
                             double beta) {
  check_field(u, b, "apply_A");
  SpectralField out = u;
  for (int j = 0; j < b.n_modes; ++j)
    out.coeffs[j] *= std::pow(b.eigenvalues[j], beta);
  return out;
}

// grid L^p norm, p-th power: sum_k |u(x_k)|^p w_k
inline double lp_norm_pow(const PhysicalField& u, const Basis& b, double p) {
  double s = 0.0;
  const double w = b.quadrature_weights[0];
  if (p == 2.0) {
    for (const cplx& v : u) s += std::norm(v);
  } else {
    for (const cplx& v : u) s += std::pow(std::norm(v), 0.5 * p);
  }
  return s * w;
}

// P_n F(u) with F(u) = |u|^{2 sigma} u, evaluated pointwise on the grid.
inline SpectralField nonlinearity_F(const SpectralField& u, const Basis& b,
                                    double sigma) {
  check_field(u, b, "nonlinearity_F");
  if (!(sigma > 0.0))
    throw std::invalid_argument("nonlinearity_F: sigma must be > 0");
  PhysicalField vals = to_physical(u, b);
  if (sigma == 1.0) {
    for (cplx& v : vals) v *= std::norm(v);
  } else {
    for (cplx& v : vals) v *= std::pow(std::norm(v), sigma);
  }
  return to_spectral(vals, b);
}

// E(u) = 1/2 sum lambda_j^beta |c_j|^2 - alpha/(2+2sigma) ||u||^{2+2sigma}_{L^{2+2sigma}}
inline double energy(const SpectralField& u, const Basis& b,
                     const ModelParams& p) {
  check_field(u, b, "energy");
  double kin = 0.0;
  for (int j = 0; j < b.n_modes; ++j)
    kin += std::pow(b.eigenvalues[j], p.beta) * std::norm(u.coeffs[j]);
  const PhysicalField vals = to_physical(u, b);
  const double lp = lp_norm_pow(vals, b, 2.0 + 2.0 * p.sigma);
  return 0.5 * kin - double(p.alpha) / (2.0 + 2.0 * p.sigma) * lp;
}

// E_1(u) = 1/2 ||u||^2_V - 1/(2+2sigma) ||u||^{2+2sigma} + G M(u)^{1+2 beta sigma/(2 beta - sigma d)}
// Focusing only; coercive once G certifies the Gagliardo-Nirenberg bound.
inline double modified_energy(const SpectralField& u, const Basis& b,
                              const ModelParams& p, double G) {
  if (p.alpha != 1)
    throw std::invalid_argument("modified_energy: defined for the focusing case only");
  check_field(u, b, "modified_energy");
  const double vnorm = v_norm_sq(u, b, p.beta);
  const PhysicalField vals = to_physical(u, b);
  const double lp = lp_norm_pow(vals, b, 2.0 + 2.0 * p.sigma);
  const double m = mass(u);
  return 0.5 * vnorm - lp / (2.0 + 2.0 * p.sigma) +
         G * std::pow(m, mass_power_exponent(p));
}

// E_alpha: the energy, plus the mass terms in the focusing case.
inline double energy_alpha(const SpectralField& u, const Basis& b,
                           const ModelParams& p, double G) {
  const double e = energy(u, b, p);
  if (p.alpha != 1) return e;
  const double m = mass(u);
  return e + 0.5 * m + G * std::pow(m, mass_power_exponent(p));
}

}  // namespace fnls
