#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "fnls/integrator.hpp"

using namespace fnls;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

SpectralField random_field(const Basis& b, uint64_t seed, uint32_t id,
                           double scale = 1.0) {
  SpectralField u = zero_field(b);
  for (int j = 0; j < b.n_modes; ++j) {
    const NormalPair g = normal_pair(seed, RngStream::fields, id, 3, uint32_t(j));
    u.coeffs[j] = scale * cplx(g.g0, g.g1);
  }
  return u;
}

SpectralField smooth_field(const Basis& b, double mass_target) {
  SpectralField u = zero_field(b);
  for (int j = 0; j < b.n_modes; ++j)
    u.coeffs[j] = std::pow(0.6, j) * cplx(1.0, 0.35 - 0.1 * j);
  const double f = std::sqrt(mass_target / mass(u));
  for (cplx& c : u.coeffs) c *= f;
  return u;
}

double h_err(const CVec& a, const CVec& r) {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - r[j]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("linear step: unitary rotation at gamma = 0") {
  const Basis b = build_basis(kPi, 1, 1);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  const NoiseOperator phi = zero_noise(1);
  NoiseIncrement inc{{0.0}, {0.0}};
  SpectralField u = zero_field(b);
  u.coeffs[0] = cplx(0.7, -0.2);
  const double t = 0.3;  // lambda_1 = 1, so c -> e^{it} c
  const SpectralField v = linear_damped_noise_step(u, b, p, phi, inc, t);
  CHECK(std::abs(v.coeffs[0] - u.coeffs[0] * cplx(std::cos(t), std::sin(t))) <
        1e-14);
  CHECK(std::abs(std::abs(v.coeffs[0]) - std::abs(u.coeffs[0])) < 1e-14);
}

TEST_CASE("linear step: exact damping factor") {
  const Basis b = build_basis(2.0, 6, 6);
  const ModelParams p{1.0, -1, 1.2, 0.7};
  const NoiseOperator phi = zero_noise(6);
  NoiseIncrement inc{std::vector<double>(6, 0.0), std::vector<double>(6, 0.0)};
  const SpectralField u = random_field(b, 5, 0);
  const double dt = 0.05;
  const SpectralField v = linear_damped_noise_step(u, b, p, phi, inc, dt);
  CHECK(mass(v) ==
        Catch::Approx(mass(u) * std::exp(-2.0 * p.gamma * dt)).epsilon(1e-13));
}

TEST_CASE("linear step: increment covariance from zero data") {
  const Basis b = build_basis(kPi, 4, 4);
  const ModelParams p{1.0, -1, 1.0, 0.8};
  NoiseOperator phi = zero_noise(4);
  phi.phi_plus = {0.5, 0.3, 0.0, 0.1};
  phi.phi_minus = {0.2, 0.0, 0.4, 0.1};
  double h_sq = 0.0;
  for (int j = 0; j < 4; ++j)
    h_sq += phi.phi_plus[j] * phi.phi_plus[j] +
            phi.phi_minus[j] * phi.phi_minus[j];
  const double dt = 0.01;
  const int n_mc = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const NoiseIncrement inc = draw_increment(99, uint32_t(i), 0, 4);
    const SpectralField v =
        linear_damped_noise_step(zero_field(b), b, p, phi, inc, dt);
    const double m = mass(v);
    sum += m;
    sum2 += m * m;
  }
  const double mean = sum / n_mc;
  const double se =
      std::sqrt((sum2 / n_mc - mean * mean) / double(n_mc - 1));
  CHECK(std::abs(mean - p.gamma * dt * h_sq) <= 3.0 * se);
}

TEST_CASE("nonlinear step: zero field, exact mass, constant-modulus phase") {
  const Basis b = build_basis(kPi, 12, 12);
  const ModelParams p{0.8, 1, 1.0, 0.0};
  CHECK(mass(nonlinear_step(zero_field(b), b, p, 0.1)) == 0.0);

  for (uint32_t id = 0; id < 100; ++id) {
    const SpectralField u = random_field(b, 7, id, 2.0);
    const SpectralField v = nonlinear_step(u, b, p, 0.07);
    CHECK(std::abs(mass(v) - mass(u)) <= 1e-13 * mass(u));
  }

  // |u| == r on the grid: a global phase shift of -alpha r^{2 sigma} dt
  const double r = 1.7, dt = 0.05;
  PhysicalField prof(b.grid_points);
  for (int k = 0; k < b.grid_points; ++k)
    prof[k] = r * std::exp(cplx(0.0, 0.4 * k));
  const SpectralField u = to_spectral(prof, b);
  const SpectralField v = nonlinear_step(u, b, p, dt);
  const cplx shift =
      std::exp(cplx(0.0, -double(p.alpha) * std::pow(r * r, p.sigma) * dt));
  for (int j = 0; j < b.n_modes; ++j)
    CHECK(std::abs(v.coeffs[j] - shift * u.coeffs[j]) <= 1e-12 * r);
}

TEST_CASE("split step: deterministic substeps are H-isometries") {
  const Basis b = build_basis(1.0, 16, 16);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  const NoiseOperator phi = zero_noise(16);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;

  for (uint32_t id = 0; id < 100; ++id) {
    const SpectralField u = random_field(b, 11, id);
    const SpectralField v = step(u, b, p, phi, cfg, 0, 0);
    CHECK(std::abs(mass(v) - mass(u)) <= 1e-13 * mass(u));
  }

  // drift over 1e4 steps
  const SpectralField u0 = smooth_field(b, 1.0);
  const double m0 = mass(u0);
  double worst = 0.0;
  detail::drive(u0, 10.0, b, p, phi, cfg, 0.0, 0,
                [&](uint64_t, double, const CVec& c, const auto&) {
                  worst = std::max(worst,
                                   std::abs(mass(SpectralField{c}) - m0) / m0);
                });
  CHECK(worst <= 1e-10);
}

TEST_CASE("split step: second order on smooth deterministic solutions") {
  const Basis b = build_basis(kPi, 16, 16);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  const NoiseOperator phi = zero_noise(16);
  const SpectralField u0 = smooth_field(b, 1.0);
  const double T = 1.0;

  auto final_state = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.record_every = 1 << 28;  // never, final only
    CVec out;
    detail::drive(u0, T, b, p, phi, cfg, 0.0, 0,
                  [&](uint64_t, double, const CVec& c, const auto&) { out = c; });
    return out;
  };

  const CVec ref = final_state(2.5e-4);  // dt/16 reference
  const double e1 = h_err(final_state(4e-3), ref);
  const double e2 = h_err(final_state(2e-3), ref);
  const double e3 = h_err(final_state(1e-3), ref);
  CHECK(std::log2(e1 / e2) >= 1.9);
  CHECK(std::log2(e2 / e3) >= 1.9);

  // energy drift also shrinks at second order
  auto energy_drift = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.record_every = 10;
    const double e0 = energy(u0, b, p);
    double worst = 0.0;
    detail::drive(u0, T, b, p, phi, cfg, 0.0, 0,
                  [&](uint64_t, double, const CVec& c, const auto&) {
                    worst = std::max(
                        worst, std::abs(energy(SpectralField{c}, b, p) - e0));
                  });
    return worst;
  };
  const double d1 = energy_drift(2e-3);
  const double d2 = energy_drift(1e-3);
  CHECK(d1 / d2 >= 3.5);
}

TEST_CASE("fixed seed reproduces the observable series bitwise") {
  const Basis b = build_basis(kPi, 8, 8);
  const ModelParams p{1.0, -1, 1.0, 0.5};
  const NoiseOperator phi = flat_k_noise(8, 4, 0.35);
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.seed = 1234;
  cfg.record_every = 7;
  const ObservableSeries a = run(zero_field(b), 2.0, b, p, phi, cfg);
  const ObservableSeries c = run(zero_field(b), 2.0, b, p, phi, cfg);
  CHECK(a.times == c.times);
  CHECK(a.mass == c.mass);
  CHECK(a.energy == c.energy);
  CHECK(a.modified_energy == c.modified_energy);
  CHECK(a.v_norm_sq == c.v_norm_sq);
  CHECK(a.residual_h == c.residual_h);

  // a different trajectory id gives a different realization
  RunOptions other;
  other.trajectory_id = 1;
  const ObservableSeries d = run(zero_field(b), 2.0, b, p, phi, cfg, other);
  CHECK(d.mass != a.mass);
}

TEST_CASE("run: conserved mass for a deterministic single-mode run") {
  const Basis b = build_basis(kPi, 4, 4);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  SpectralField u0 = zero_field(b);
  u0.coeffs[0] = cplx(0.9, 0.1);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  const ObservableSeries s = run(u0, 1.0, b, p, zero_noise(4), cfg);
  for (double m : s.mass)
    CHECK(m == Catch::Approx(mass(u0)).epsilon(1e-12));
  CHECK(s.times.front() == 0.0);
  CHECK(s.times.back() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("run: exact damping envelope with noise and nonlinearity off") {
  const Basis b = build_basis(kPi, 6, 6);
  const ModelParams p{1.0, -1, 1.0, 1.0};
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.nonlinearity = false;
  const SpectralField u0 = smooth_field(b, 2.0);
  const ObservableSeries s = run(u0, 3.0, b, p, zero_noise(6), cfg);
  for (size_t i = 0; i < s.times.size(); ++i)
    CHECK(s.mass[i] == Catch::Approx(mass(u0) * std::exp(-2.0 * s.times[i]))
                           .epsilon(1e-12));
}

TEST_CASE("noise path second moment matches the Wiener isometry") {
  // E || sqrt(gamma) Phi W(t) ||_H^2 = gamma t ||Phi||^2_{HS(Y,H)},
  // and the V-norm analogue.
  const Basis b = build_basis(kPi, 4, 4);
  const ModelParams p{1.0, -1, 1.0, 0.6};
  NoiseOperator phi = zero_noise(4);
  phi.phi_plus = {0.5, 0.25, 0.125, 0.0};
  phi.phi_minus = {0.1, 0.3, 0.0, 0.2};
  const HsNorms ns = hs_norms(phi, b, p.beta);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.nonlinearity = false;
  const double T = 0.1;
  const int n_mc = 4000;
  double sh = 0.0, sh2 = 0.0, sv = 0.0, sv2 = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    CVec path;
    detail::drive(zero_field(b), T, b, p, phi, cfg, 0.0, uint32_t(i),
                  [&](uint64_t, double, const CVec&, const detail::Stepper& st) {
                    path = st.noise_path();
                  });
    double h = 0.0, v = 0.0;
    for (int j = 0; j < 4; ++j) {
      h += std::norm(path[j]);
      v += (1.0 + std::pow(b.eigenvalues[j], p.beta)) * std::norm(path[j]);
    }
    sh += h;
    sh2 += h * h;
    sv += v;
    sv2 += v * v;
  }
  const double mh = sh / n_mc,
               seh = std::sqrt((sh2 / n_mc - mh * mh) / (n_mc - 1));
  const double mv = sv / n_mc,
               sev = std::sqrt((sv2 / n_mc - mv * mv) / (n_mc - 1));
  CHECK(std::abs(mh - p.gamma * T * ns.h_sq) <= 3.0 * seh);
  CHECK(std::abs(mv - p.gamma * T * ns.v_sq) <= 3.0 * sev);
}

TEST_CASE("linear model: OU stationary per-mode moments, gamma independent") {
  const Basis b = build_basis(kPi, 4, 4);
  NoiseOperator phi = zero_noise(4);
  phi.phi_plus = {0.5, 0.0, 0.2, 0.3};
  phi.phi_minus = {0.1, 0.4, 0.0, 0.3};

  for (double gamma : {0.5, 1.0}) {
    const ModelParams p{1.0, -1, 1.0, gamma};
    IntegratorConfig cfg;
    cfg.dt = 2e-3;
    cfg.nonlinearity = false;
    cfg.seed = 31u + uint64_t(gamma * 10);
    const int n_traj = 16;
    const double T = 200.0, burn = 20.0;
    std::vector<double> sum(4, 0.0), sum2(4, 0.0);
    for (int tr = 0; tr < n_traj; ++tr) {
      std::vector<double> acc(4, 0.0);
      long count = 0;
      detail::drive(zero_field(b), T, b, p, phi, cfg, 0.0, uint32_t(tr),
                    [&](uint64_t, double t, const CVec& c, const auto&) {
                      if (t < burn) return;
                      for (int j = 0; j < 4; ++j) acc[j] += std::norm(c[j]);
                      ++count;
                    });
      for (int j = 0; j < 4; ++j) {
        const double avg = acc[j] / double(count);
        sum[j] += avg;
        sum2[j] += avg * avg;
      }
    }
    for (int j = 0; j < 4; ++j) {
      const double mean = sum[j] / n_traj;
      const double se =
          std::sqrt((sum2[j] / n_traj - mean * mean) / (n_traj - 1));
      const double target =
          0.5 * (phi.phi_plus[j] * phi.phi_plus[j] +
                 phi.phi_minus[j] * phi.phi_minus[j]);
      CHECK(std::abs(mean - target) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("exact OU sampler: unbiased at coarse dt, isotropic only") {
  const Basis b = build_basis(kPi, 3, 3);
  const ModelParams p{1.0, -1, 1.0, 1.0};
  const NoiseOperator phi = flat_k_noise(3, 3, 0.4);
  IntegratorConfig cfg;
  cfg.dt = 0.1;  // far too coarse for EM, exact for the OU sampler
  cfg.nonlinearity = false;
  cfg.linear_update = LinearUpdate::exact_ou;
  cfg.seed = 77;
  const int n_traj = 24;
  const double T = 400.0, burn = 10.0;
  std::vector<double> sum(3, 0.0), sum2(3, 0.0);
  for (int tr = 0; tr < n_traj; ++tr) {
    std::vector<double> acc(3, 0.0);
    long count = 0;
    detail::drive(zero_field(b), T, b, p, phi, cfg, 0.0, uint32_t(tr),
                  [&](uint64_t, double t, const CVec& c, const auto&) {
                    if (t < burn) return;
                    for (int j = 0; j < 3; ++j) acc[j] += std::norm(c[j]);
                    ++count;
                  });
    for (int j = 0; j < 3; ++j) {
      const double avg = acc[j] / double(count);
      sum[j] += avg;
      sum2[j] += avg * avg;
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j] / n_traj;
    const double se = std::sqrt((sum2[j] / n_traj - mean * mean) / (n_traj - 1));
    CHECK(std::abs(mean - 0.16) <= 3.0 * se);
  }

  NoiseOperator aniso = phi;
  aniso.phi_minus[1] = 0.0;
  CHECK_THROWS_AS(detail::Stepper(b, p, aniso, cfg), std::invalid_argument);
}

TEST_CASE("discrete mass Ito balance: defect vanishes at O(dt) or better") {
  const Basis b = build_basis(kPi, 8, 8);
  const NoiseOperator phi = flat_k_noise(8, 4, 0.3);
  double h_sq = hs_norms(phi, b, 1.0).h_sq;

  auto mean_defect = [&](double dt) {
    const ModelParams p{1.0, -1, 1.0, 0.5};
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.record_every = 1;
    cfg.seed = 2024;
    const double T = 5.0;
    const int n_traj = 64;
    double sum = 0.0;
    long count = 0;
    for (int tr = 0; tr < n_traj; ++tr) {
      double prev_mass = 0.0;
      CVec prev;
      detail::drive(
          zero_field(b), T, b, p, phi, cfg, 0.0, uint32_t(tr),
          [&](uint64_t k, double, const CVec& c, const auto&) {
            const double m = mass(SpectralField{c});
            if (k > 0) {
              const NoiseIncrement inc =
                  draw_increment(cfg.seed, uint32_t(tr), k - 1, 8);
              double ito = 0.0;  // 2 Re (u, sqrt(gamma) Phi dW)_H
              for (int j = 0; j < 8; ++j) {
                const cplx dW = std::sqrt(dt) *
                                cplx(phi.phi_plus[j] * inc.gauss_plus[j],
                                     phi.phi_minus[j] * inc.gauss_minus[j]);
                ito += 2.0 * std::sqrt(p.gamma) *
                       (prev[j] * std::conj(dW)).real();
              }
              const double defect = (m - prev_mass) +
                                    2.0 * p.gamma * prev_mass * dt -
                                    p.gamma * h_sq * dt - ito;
              sum += defect;
              ++count;
            }
            prev_mass = m;
            prev = c;
          });
    }
    return std::abs(sum / double(count));
  };

  const double d1 = mean_defect(2e-2);
  const double d2 = mean_defect(1e-2);
  CHECK(d1 / d2 >= 1.9);
}

TEST_CASE("lie splitting: isometric substeps, first-order alternative") {
  const Basis b = build_basis(kPi, 12, 12);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  const NoiseOperator phi = zero_noise(12);
  IntegratorConfig lie;
  lie.dt = 1e-3;
  lie.scheme = SplitScheme::lie_split;
  const SpectralField u0 = smooth_field(b, 1.0);

  // both substeps stay H-isometries
  const SpectralField v = step(u0, b, p, phi, lie, 0, 0);
  CHECK(std::abs(mass(v) - mass(u0)) <= 1e-13 * mass(u0));

  // the two schemes genuinely differ
  IntegratorConfig strang = lie;
  strang.scheme = SplitScheme::strang_split;
  const SpectralField w = step(u0, b, p, phi, strang, 0, 0);
  double diff = 0.0;
  for (int j = 0; j < b.n_modes; ++j) diff += std::norm(v.coeffs[j] - w.coeffs[j]);
  CHECK(diff > 0.0);
}

TEST_CASE("padded collocation grid: transforms stay consistent") {
  // m = ceil(3n/2) de-aliases the cubic term; the split step is then only
  // approximately mass-preserving, so the drift is small but not round-off
  const Basis b = build_basis(kPi, 16, 24);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  const SpectralField u0 = smooth_field(b, 1.0);
  const ObservableSeries s = run(u0, 1.0, b, p, zero_noise(16), cfg);
  for (double m : s.mass) CHECK(std::abs(m - mass(u0)) <= 1e-4 * mass(u0));
  CHECK(std::abs(s.mass.back() - mass(u0)) <= 1e-4 * mass(u0));
}

TEST_CASE("non-finite states abort with a diagnosable error") {
  const Basis b = build_basis(kPi, 4, 4);
  const ModelParams p{1.0, -1, 1.0, 0.0};
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  SpectralField u0 = zero_field(b);
  u0.coeffs[0] = cplx(1e200, 0.0);  // |u|^2 overflows in the phase
  CHECK_THROWS_AS(run(u0, 1.0, b, p, zero_noise(4), cfg), TrajectoryAbort);
}
