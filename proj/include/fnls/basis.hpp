#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fnls {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// State of the Galerkin system: coefficients c_j = (u, e_j)_H, j = 1..n.
struct SpectralField {
  CVec coeffs;
};

// Complex values on the collocation nodes x_k, k = 1..m.
using PhysicalField = CVec;

// Truncated Dirichlet sine eigensystem on D = (0, L):
//   e_j(x) = sqrt(2/L) sin(j pi x / L),  lambda_j = (j pi / L)^2.
// Collocation nodes are the m interior points x_k = k L/(m+1); with the
// constant weight L/(m+1) the e_j are exactly orthonormal under the discrete
// inner product for j <= m, so analysis/synthesis below invert each other.
struct Basis {
  double domain_length = 0.0;
  int n_modes = 0;
  int grid_points = 0;
  std::vector<double> eigenvalues;         // lambda_j, strictly increasing
  std::vector<double> nodes;               // x_k, k = 1..m
  std::vector<double> quadrature_weights;  // all equal L/(m+1)
  std::vector<double> sine;                // sine[k*n + j] = sin((j+1)(k+1)pi/(m+1))
  double norm_factor = 0.0;                // sqrt(2/L)
};

inline Basis build_basis(double domain_length, int n_modes, int grid_points) {
  if (!(domain_length > 0.0))
    throw std::invalid_argument("build_basis: domain_length must be > 0");
  if (n_modes < 1) throw std::invalid_argument("build_basis: n_modes must be >= 1");
  if (grid_points < n_modes)
    throw std::invalid_argument("build_basis: grid_points must be >= n_modes");

  Basis b;
  b.domain_length = domain_length;
  b.n_modes = n_modes;
  b.grid_points = grid_points;
  b.norm_factor = std::sqrt(2.0 / domain_length);

  const double pi = 3.14159265358979323846264338327950288;
  b.eigenvalues.resize(n_modes);
  for (int j = 0; j < n_modes; ++j) {
    const double k = (j + 1) * pi / domain_length;
    b.eigenvalues[j] = k * k;
  }

  const int m = grid_points;
  const double w = domain_length / (m + 1);
  b.nodes.resize(m);
  b.quadrature_weights.assign(m, w);
  b.sine.resize(size_t(m) * n_modes);
  for (int k = 0; k < m; ++k) {
    b.nodes[k] = (k + 1) * w;
    for (int j = 0; j < n_modes; ++j)
      b.sine[size_t(k) * n_modes + j] =
          std::sin(pi * double(j + 1) * double(k + 1) / (m + 1));
  }
  return b;
}

inline void check_field(const SpectralField& f, const Basis& b,
                        const char* where) {
  if (int(f.coeffs.size()) != b.n_modes)
    throw std::invalid_argument(std::string(where) +
                                ": field length does not match basis n_modes");
}

// u(x_k) = sum_j c_j e_j(x_k)
inline void to_physical_into(const SpectralField& f, const Basis& b,
                             PhysicalField& out) {
  check_field(f, b, "to_physical");
  const int n = b.n_modes, m = b.grid_points;
  out.assign(m, cplx(0.0, 0.0));
  for (int k = 0; k < m; ++k) {
    const double* row = &b.sine[size_t(k) * n];
    double re = 0.0, im = 0.0;
    for (int j = 0; j < n; ++j) {
      re += row[j] * f.coeffs[j].real();
      im += row[j] * f.coeffs[j].imag();
    }
    out[k] = cplx(b.norm_factor * re, b.norm_factor * im);
  }
}

inline PhysicalField to_physical(const SpectralField& f, const Basis& b) {
  PhysicalField out;
  to_physical_into(f, b, out);
  return out;
}

// c_j = (u, e_j) under the discrete quadrature
inline void to_spectral_into(const PhysicalField& u, const Basis& b,
                             SpectralField& out) {
  if (int(u.size()) != b.grid_points)
    throw std::invalid_argument("to_spectral: values length does not match grid_points");
  const int n = b.n_modes, m = b.grid_points;
  const double scale = b.norm_factor * b.quadrature_weights[0];
  out.coeffs.assign(n, cplx(0.0, 0.0));
  double* acc = reinterpret_cast<double*>(out.coeffs.data());
  for (int k = 0; k < m; ++k) {
    const double* row = &b.sine[size_t(k) * n];
    const double ur = u[k].real(), ui = u[k].imag();
    for (int j = 0; j < n; ++j) {
      acc[2 * j] += row[j] * ur;
      acc[2 * j + 1] += row[j] * ui;
    }
  }
  for (int j = 0; j < n; ++j) out.coeffs[j] *= scale;
}

inline SpectralField to_spectral(const PhysicalField& u, const Basis& b) {
  SpectralField out;
  to_spectral_into(u, b, out);
  return out;
}

inline SpectralField zero_field(const Basis& b) {
  return SpectralField{CVec(size_t(b.n_modes), cplx(0.0, 0.0))};
}

}  // namespace fnls
