#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace fnls {

// Physical parameters of the equation
//   du + [-i (-Laplace)^beta u + i alpha |u|^{2 sigma} u + gamma u] dt
//     = sqrt(gamma) Phi dW
// on D = (0, L) with Dirichlet conditions; the spatial dimension is fixed
// to 1 in this implementation.
struct ModelParams {
  double sigma = 1.0;   // nonlinearity exponent, > 0
  int alpha = -1;       // +1 focusing, -1 defocusing
  double beta = 1.0;    // fractional power of the negative Laplacian, > 0
  double gamma = 0.0;   // damping, >= 0
  static constexpr int dimension = 1;
};

// Admissibility of sigma:
//   focusing:    0 < sigma < 2 beta / d
//   defocusing:  0 < sigma < 2 beta / (d - 2 beta)  when d > 2 beta,
//                sigma > 0 otherwise.
inline std::vector<std::string> validate(const ModelParams& p) {
  std::vector<std::string> errors;
  const double d = double(ModelParams::dimension);
  if (!(p.sigma > 0.0)) errors.push_back("sigma must be > 0");
  if (p.alpha != 1 && p.alpha != -1) errors.push_back("alpha must be +1 or -1");
  if (!(p.beta > 0.0)) errors.push_back("beta must be > 0");
  if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma))
    errors.push_back("gamma must be finite and >= 0");
  if (p.sigma > 0.0 && p.beta > 0.0) {
    if (p.alpha == 1 && !(p.sigma < 2.0 * p.beta / d))
      errors.push_back("focusing case requires sigma < 2*beta/d");
    if (p.alpha == -1 && d > 2.0 * p.beta &&
        !(p.sigma < 2.0 * p.beta / (d - 2.0 * p.beta)))
      errors.push_back("defocusing case with d > 2*beta requires sigma < 2*beta/(d-2*beta)");
  }
  return errors;
}

inline ModelParams make_params(double sigma, int alpha, double beta,
                               double gamma) {
  ModelParams p;
  p.sigma = sigma;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  auto errors = validate(p);
  if (!errors.empty()) {
    std::string msg = "invalid ModelParams:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }
  return p;
}

// beta > d/2 (d != 2): the regime with unique, energy-conserving limit flow
inline bool regularity_assumption_holds(const ModelParams& p) {
  return p.beta > 0.5 * double(ModelParams::dimension);
}

// exponent of the mass in the modified energy: 1 + 2 beta sigma/(2 beta - sigma d)
inline double mass_power_exponent(const ModelParams& p) {
  const double d = double(ModelParams::dimension);
  return 1.0 + 2.0 * p.beta * p.sigma / (2.0 * p.beta - p.sigma * d);
}

}  // namespace fnls
