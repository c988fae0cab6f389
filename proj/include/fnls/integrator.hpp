#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fnls/basis.hpp"
#include "fnls/functionals.hpp"
#include "fnls/gn.hpp"
#include "fnls/noise.hpp"
#include "fnls/params.hpp"
#include "fnls/rng.hpp"

namespace fnls {

enum class SplitScheme { strang_split, lie_split };

// em: exact deterministic rotation-damping flow followed by an
//     Euler-Maruyama increment (exact order for additive noise).
// exact_ou: exact one-step sampling of the rotated damped OU mode;
//     available for isotropic noise (phi_j = phi_{-j}) only, where rotation
//     invariance gives a closed form.
enum class LinearUpdate { em, exact_ou };

struct IntegratorConfig {
  double dt = 1e-3;
  SplitScheme scheme = SplitScheme::strang_split;
  uint64_t seed = 1;
  int record_every = 10;
  bool nonlinearity = true;
  LinearUpdate linear_update = LinearUpdate::em;
};

// Standard normal draws for the Wiener increments of one step, keyed by
// (seed, trajectory, step, mode): reproducible and order-independent.
struct NoiseIncrement {
  std::vector<double> gauss_plus;
  std::vector<double> gauss_minus;
};

inline NoiseIncrement draw_increment(uint64_t seed, uint32_t trajectory_id,
                                     uint64_t step_index, int n_modes) {
  NoiseIncrement inc;
  inc.gauss_plus.resize(n_modes);
  inc.gauss_minus.resize(n_modes);
  for (int j = 0; j < n_modes; ++j) {
    const NormalPair g = normal_pair(seed, RngStream::noise, step_index,
                                     trajectory_id, uint32_t(j));
    inc.gauss_plus[j] = g.g0;
    inc.gauss_minus[j] = g.g1;
  }
  return inc;
}

struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> modified_energy;  // focusing only; zero otherwise
  std::vector<double> v_norm_sq;
  std::vector<double> residual_h;
};

struct TrajectoryAbort : std::runtime_error {
  double time;
  uint64_t step;
  TrajectoryAbort(double t, uint64_t s)
      : std::runtime_error("non-finite state at t = " + std::to_string(t) +
                           " (step " + std::to_string(s) + ")"),
        time(t),
        step(s) {}
};

// e^{i theta}; small angles (the common case at production dt) short-circuit
// the libm calls with a Taylor evaluation exact to double precision.
inline cplx unit_rotation(double th) {
  if (std::abs(th) < 0.05) {
    const double t2 = th * th;
    const double c =
        1.0 - t2 * (0.5 - t2 * (1.0 / 24.0 - t2 * (1.0 / 720.0 - t2 / 40320.0)));
    const double s =
        th * (1.0 - t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 / 5040.0)));
    return cplx(c, s);
  }
  return cplx(std::cos(th), std::sin(th));
}

namespace detail {

// In-place stepping engine with precomputed tables; the public pure
// functions below and the ensemble drivers all go through it.
class Stepper {
 public:
  Stepper(const Basis& basis, const ModelParams& params,
          const NoiseOperator& noise, const IntegratorConfig& config,
          double residual_start = 0.0)
      : b_(basis),
        p_(params),
        noise_(noise),
        cfg_(config),
        residual_start_(residual_start) {
    check_noise(noise, basis);
    if (!(config.dt > 0.0))
      throw std::invalid_argument("IntegratorConfig: dt must be > 0");
    if (config.record_every < 1)
      throw std::invalid_argument("IntegratorConfig: record_every must be >= 1");
    const int n = b_.n_modes;
    rot_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double lam = std::pow(b_.eigenvalues[j], p_.beta);
      rot_[j] = std::exp(-p_.gamma * cfg_.dt) *
                cplx(std::cos(lam * cfg_.dt), std::sin(lam * cfg_.dt));
    }
    sqrt_gamma_dt_ = std::sqrt(p_.gamma * cfg_.dt);
    for (int j = 0; j < n; ++j)
      if (noise_.phi_plus[j] != 0.0 || noise_.phi_minus[j] != 0.0)
        active_.push_back(j);
    stochastic_ = p_.gamma > 0.0 && !active_.empty();
    if (cfg_.linear_update == LinearUpdate::exact_ou) {
      if (!is_isotropic(noise_))
        throw std::invalid_argument(
            "exact_ou linear update requires isotropic noise (phi_j = phi_{-j})");
      ou_stddev_.resize(n, 0.0);
      const double var_factor =
          p_.gamma > 0.0
              ? 0.5 * (1.0 - std::exp(-2.0 * p_.gamma * cfg_.dt))
              : 0.0;
      for (int j : active_)
        ou_stddev_[j] = noise_.phi_plus[j] * std::sqrt(var_factor);
    }
    pre_.resize(b_.grid_points);
    pim_.resize(b_.grid_points);
    sre_.resize(n);
    sim_.resize(n);
    integral_.assign(n, cplx(0.0, 0.0));
    noise_path_.assign(n, cplx(0.0, 0.0));
  }

  // One full step from t = step_index * dt; updates residual accumulators.
  void advance(CVec& c, uint64_t step_index, uint32_t trajectory_id) {
    const double t = double(step_index) * cfg_.dt;
    if (track_residual() && t >= residual_start_)
      for (int j = 0; j < b_.n_modes; ++j) integral_[j] += c[j] * cfg_.dt;

    switch (cfg_.scheme) {
      case SplitScheme::strang_split:
        if (cfg_.nonlinearity) nonlinear_inplace(c, 0.5 * cfg_.dt);
        linear_inplace(c, step_index, trajectory_id, t);
        if (cfg_.nonlinearity) nonlinear_inplace(c, 0.5 * cfg_.dt);
        break;
      case SplitScheme::lie_split:
        linear_inplace(c, step_index, trajectory_id, t);
        if (cfg_.nonlinearity) nonlinear_inplace(c, cfg_.dt);
        break;
    }

    double m2 = 0.0;
    for (const cplx& v : c) m2 += std::norm(v);
    if (!std::isfinite(m2))
      throw TrajectoryAbort(t + cfg_.dt, step_index + 1);
  }

  // r(t) = || gamma * int_0^t u ds - sqrt(gamma) Phi W(t) ||_H,
  // left-endpoint quadrature, noise path rebuilt from the same increments.
  double residual_h() const {
    double s = 0.0;
    for (int j = 0; j < b_.n_modes; ++j)
      s += std::norm(p_.gamma * integral_[j] - noise_path_[j]);
    return std::sqrt(s);
  }

  bool track_residual() const { return stochastic_; }
  const CVec& noise_path() const { return noise_path_; }

 private:
  void linear_inplace(CVec& c, uint64_t step_index, uint32_t trajectory_id,
                      double t_step_start) {
    const int n = b_.n_modes;
    for (int j = 0; j < n; ++j) c[j] *= rot_[j];
    if (!stochastic_) return;
    const bool add_to_path = t_step_start >= residual_start_;
    for (int j : active_) {
      const NormalPair g = normal_pair(cfg_.seed, RngStream::noise, step_index,
                                       trajectory_id, uint32_t(j));
      cplx dw;
      if (cfg_.linear_update == LinearUpdate::em) {
        dw = sqrt_gamma_dt_ *
             cplx(noise_.phi_plus[j] * g.g0, noise_.phi_minus[j] * g.g1);
      } else {
        dw = ou_stddev_[j] * cplx(g.g0, g.g1);
      }
      c[j] += dw;
      if (add_to_path) noise_path_[j] += dw;
    }
  }

  // exact sub-flow of du/dt = -i alpha |u|^{2 sigma} u: pointwise phase
  // rotation on the grid, modulus preserved node by node
  void nonlinear_inplace(CVec& c, double tau) {
    const int n = b_.n_modes, m = b_.grid_points;
    const double nf = b_.norm_factor;
    double* cre = sre_.data();
    double* cim = sim_.data();
    for (int j = 0; j < n; ++j) {
      cre[j] = c[j].real();
      cim[j] = c[j].imag();
    }
    double* ure = pre_.data();
    double* uim = pim_.data();
    for (int k = 0; k < m; ++k) {
      const double* row = &b_.sine[size_t(k) * n];
      double re = 0.0, im = 0.0;
      for (int j = 0; j < n; ++j) {
        re += row[j] * cre[j];
        im += row[j] * cim[j];
      }
      ure[k] = nf * re;
      uim[k] = nf * im;
    }
    const double atau = -double(p_.alpha) * tau;
    const bool cubic = p_.sigma == 1.0;
    for (int k = 0; k < m; ++k) {
      const double r2 = ure[k] * ure[k] + uim[k] * uim[k];
      const cplx rot =
          unit_rotation(atau * (cubic ? r2 : std::pow(r2, p_.sigma)));
      const double nr = ure[k] * rot.real() - uim[k] * rot.imag();
      const double ni = ure[k] * rot.imag() + uim[k] * rot.real();
      ure[k] = nr;
      uim[k] = ni;
    }
    const double scale = nf * b_.quadrature_weights[0];
    for (int j = 0; j < n; ++j) {
      cre[j] = 0.0;
      cim[j] = 0.0;
    }
    for (int k = 0; k < m; ++k) {
      const double* row = &b_.sine[size_t(k) * n];
      const double ur = ure[k], ui = uim[k];
      for (int j = 0; j < n; ++j) {
        cre[j] += row[j] * ur;
        cim[j] += row[j] * ui;
      }
    }
    for (int j = 0; j < n; ++j) c[j] = cplx(scale * cre[j], scale * cim[j]);
  }

  const Basis& b_;
  const ModelParams& p_;
  const NoiseOperator& noise_;
  const IntegratorConfig& cfg_;
  double residual_start_;
  std::vector<cplx> rot_;
  std::vector<double> ou_stddev_;
  std::vector<int> active_;
  double sqrt_gamma_dt_ = 0.0;
  bool stochastic_ = false;
  std::vector<double> pre_, pim_, sre_, sim_;
  CVec integral_;    // int_0^t u ds (left endpoint)
  CVec noise_path_;  // sqrt(gamma) Phi W(t)
};

// Shared trajectory loop.  Recorder is called at t = 0, every record_every
// steps, and at the final step, with (step_index, time, coeffs, stepper).
template <class Recorder>
void drive(const SpectralField& initial, double T, const Basis& basis,
           const ModelParams& params, const NoiseOperator& noise,
           const IntegratorConfig& config, double residual_start,
           uint32_t trajectory_id, Recorder&& record) {
  check_field(initial, basis, "run");
  if (!(T >= config.dt))
    throw std::invalid_argument("run: T must be at least one step");
  const uint64_t n_steps = uint64_t(std::llround(T / config.dt));
  Stepper st(basis, params, noise, config, residual_start);
  CVec c = initial.coeffs;
  record(uint64_t(0), 0.0, c, st);
  for (uint64_t k = 0; k < n_steps; ++k) {
    st.advance(c, k, trajectory_id);
    const uint64_t done = k + 1;
    if (done % uint64_t(config.record_every) == 0 || done == n_steps)
      record(done, double(done) * config.dt, c, st);
  }
}

}  // namespace detail

// --- pure single-step operations ---

// Exact flow of the linear damped rotation plus the Euler-Maruyama noise
// increment:  c_j <- e^{(i lambda_j^beta - gamma) dt} c_j
//                     + sqrt(gamma dt) (phi_j g+_j + i phi_{-j} g-_j).
inline SpectralField linear_damped_noise_step(const SpectralField& field,
                                              const Basis& basis,
                                              const ModelParams& params,
                                              const NoiseOperator& noise,
                                              const NoiseIncrement& inc,
                                              double dt) {
  check_field(field, basis, "linear_damped_noise_step");
  check_noise(noise, basis);
  SpectralField out = field;
  const double sgdt = std::sqrt(params.gamma * dt);
  for (int j = 0; j < basis.n_modes; ++j) {
    const double lam = std::pow(basis.eigenvalues[j], params.beta);
    out.coeffs[j] *= std::exp(-params.gamma * dt) *
                     cplx(std::cos(lam * dt), std::sin(lam * dt));
    out.coeffs[j] += sgdt * cplx(noise.phi_plus[j] * inc.gauss_plus[j],
                                 noise.phi_minus[j] * inc.gauss_minus[j]);
  }
  return out;
}

inline SpectralField nonlinear_step(const SpectralField& field,
                                    const Basis& basis,
                                    const ModelParams& params, double dt) {
  check_field(field, basis, "nonlinear_step");
  PhysicalField vals = to_physical(field, basis);
  const double atau = -double(params.alpha) * dt;
  for (cplx& v : vals)
    v *= unit_rotation(atau * std::pow(std::norm(v), params.sigma));
  return to_spectral(vals, basis);
}

// One step of the split scheme; deterministic given
// (seed, trajectory_id, step_index).
inline SpectralField step(const SpectralField& field, const Basis& basis,
                          const ModelParams& params,
                          const NoiseOperator& noise,
                          const IntegratorConfig& config, uint64_t step_index,
                          uint32_t trajectory_id) {
  check_field(field, basis, "step");
  detail::Stepper st(basis, params, noise, config);
  SpectralField out = field;
  st.advance(out.coeffs, step_index, trajectory_id);
  return out;
}

struct RunOptions {
  double residual_start = 0.0;
  double gn_constant = -1.0;  // < 0: estimate when focusing
  uint32_t trajectory_id = 0;
};

inline double default_gn_constant(const Basis& basis,
                                  const ModelParams& params) {
  if (params.alpha != 1) return 0.0;
  return estimate_G(basis, params, 2000, 0x6e1d5u);
}

// Trajectory driver: records observables (including t = 0 and t = T) and
// accumulates the inviscid residual.
inline ObservableSeries run(const SpectralField& initial, double T,
                            const Basis& basis, const ModelParams& params,
                            const NoiseOperator& noise,
                            const IntegratorConfig& config,
                            const RunOptions& options = {}) {
  const double G = options.gn_constant >= 0.0
                       ? options.gn_constant
                       : default_gn_constant(basis, params);
  ObservableSeries s;
  detail::drive(
      initial, T, basis, params, noise, config, options.residual_start,
      options.trajectory_id,
      [&](uint64_t, double t, const CVec& c, const detail::Stepper& st) {
        SpectralField u{c};
        s.times.push_back(t);
        s.mass.push_back(mass(u));
        s.energy.push_back(energy(u, basis, params));
        s.modified_energy.push_back(
            params.alpha == 1 ? modified_energy(u, basis, params, G) : 0.0);
        s.v_norm_sq.push_back(v_norm_sq(u, basis, params.beta));
        s.residual_h.push_back(st.track_residual() ? st.residual_h() : 0.0);
      });
  return s;
}

}  // namespace fnls
