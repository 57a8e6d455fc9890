#include <doctest.h>

#include <cmath>
#include <limits>

#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/errors.hpp"
#include "nse_mdp/sampling.hpp"

using namespace nse_mdp;
using spectral::SpectralField;

namespace {

double h_dist(const SpectralField& a, const SpectralField& b) { return spectral::h_norm(a - b); }

SpectralField single_mode(const spectral::BasisPtr& b, int k1, int k2, spectral::complex c) {
  SpectralField u(b);
  u.set_coefficient(k1, k2, c);
  return u;
}

noise::NoiseModel constant_noise(const spectral::BasisPtr& b) {
  std::vector<SpectralField> g0{single_mode(b, 1, 0, {1.0, 0.0}), single_mode(b, 1, 1, {0.0, 0.5})};
  return noise::make_affine_noise({1.0, 0.5}, {1.0, -2.0}, g0, 0.0, -1, ForceSpec::zero());
}

}  // namespace

TEST_CASE("a single unforced mode decays at exactly its Stokes rate") {
  const auto b = spectral::make_basis(4, 0.13, 2.5);
  const auto u0 = single_mode(b, 2, 3, {0.8, -0.3});
  const TimeGrid grid(1.5, 37);
  const auto traj = dynamics::solve_nse(u0, ForceSpec::zero(), grid);
  bool conj = false;
  const double lambda = 0.13 * b->modes()[b->find(2, 3, conj)].kappa_sq;
  for (std::size_t n = 0; n < grid.n_nodes(); n += 6) {
    const double expect = std::exp(-lambda * grid.time(n));
    CHECK(std::abs(traj.fields[n].coefficient(2, 3) - expect * u0.coefficient(2, 3)) < 1e-14);
  }
}

TEST_CASE("forced single mode converges at second order to the closed form") {
  const auto b = spectral::make_basis(3, 0.2);
  const auto target = single_mode(b, 1, 2, {0.6, 0.1});
  const double lambda = 0.2 * 5.0;  // kappa^2 = 5 on the 2 pi torus
  const auto f = ForceSpec::constant(lambda * target);
  const double T = 2.0;
  const auto exact = (1.0 - std::exp(-lambda * T)) * target;
  double prev = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const auto traj = dynamics::solve_nse(SpectralField(b), f, TimeGrid(T, n));
    const double err = h_dist(traj.back(), exact);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("energy balance residual vanishes at second order") {
  const auto b = spectral::make_basis(4, 0.1);
  Rng rng = make_rng(3);
  RandomFieldOptions o;
  o.amplitude = 2.0;
  const auto u0 = random_field(b, rng, o);
  const auto f = ForceSpec::modulated(single_mode(b, 1, 0, {0.3, 0.0}), 2.0);
  std::vector<double> res;
  for (int n : {256, 512, 1024})
    res.push_back(std::abs(dynamics::energy_balance_residual(dynamics::solve_nse(u0, f, TimeGrid(1.0, n)), f)));
  const double order = std::log2(res[1] / res[2]);
  CHECK(order > 1.7);
  CHECK(order < 2.3);
  CHECK(res[2] < 1e-4);
}

TEST_CASE("energy is non-increasing without forcing") {
  const auto b = spectral::make_basis(5, 0.05);
  Rng rng = make_rng(4);
  const auto u0 = random_field(b, rng);
  const auto traj = dynamics::solve_nse(u0, ForceSpec::zero(), TimeGrid(1.0, 200));
  for (std::size_t n = 1; n < traj.size(); ++n)
    CHECK(spectral::h_norm(traj.fields[n]) <= spectral::h_norm(traj.fields[n - 1]) * (1.0 + 1e-12));
}

TEST_CASE("solve_nse rejects energetic data and flags divergence") {
  const auto b = spectral::make_basis(2, 0.1);
  const auto big = single_mode(b, 1, 0, {1e4, 0.0});
  CHECK_THROWS_AS(dynamics::solve_nse(big, ForceSpec::zero(), TimeGrid(1.0, 4)), InvalidArgument);
  dynamics::NseOptions o;
  o.energy_cap = 1e12;
  CHECK_NOTHROW(dynamics::solve_nse(big, ForceSpec::zero(), TimeGrid(1.0, 4), o));

  auto bad = single_mode(b, 1, 0, {std::numeric_limits<double>::quiet_NaN(), 0.0});
  CHECK_THROWS_AS(dynamics::check_divergence(bad, 1e8, 3), DivergedRun);
  try {
    dynamics::check_divergence(single_mode(b, 1, 0, {2e8, 0.0}), 1e8, 7);
  } catch (const DivergedRun& e) {
    CHECK(e.step() == 7);
  }
}

TEST_CASE("linearized step transpose satisfies the adjoint identity") {
  const auto b = spectral::make_basis(3, 0.1, 1.9);
  Rng rng = make_rng(5);
  const TimeGrid grid(0.8, 10);
  const auto base = dynamics::solve_nse(random_field(b, rng), ForceSpec::zero(), grid);
  for (bool adv : {true, false}) {
    const dynamics::LinearizedStepper st(base, grid, adv);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = rep % grid.n_steps();
      const auto eta = random_field_varied(b, rng), F0 = random_field_varied(b, rng),
                 F1 = random_field_varied(b, rng), lam = random_field_varied(b, rng);
      const double lhs = spectral::inner_h(st.step(eta, F0, F1, n), lam);
      const auto adj = st.adjoint_step(lam, n);
      const double rhs = spectral::inner_h(eta, adj.lambda) + spectral::inner_h(F0, adj.bar_F_n) +
                         spectral::inner_h(F1, adj.bar_F_n1);
      const double scale = spectral::h_norm(lam) *
                           (spectral::h_norm(eta) + grid.dt() * (spectral::h_norm(F0) + spectral::h_norm(F1)));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("mild solver is exact for forcing linear in time") {
  const auto b = spectral::make_basis(3, 0.3);
  Rng rng = make_rng(6);
  const auto g = random_field(b, rng);
  const TimeGrid grid(1.3, 7);
  std::vector<SpectralField> forcing;
  for (std::size_t n = 0; n < grid.n_nodes(); ++n) forcing.push_back(grid.time(n) * g);
  const auto Z = dynamics::solve_mild_forced(forcing, grid);
  for (std::size_t i = 0; i < b->mode_count(); ++i) {
    const double lam = 0.3 * b->modes()[i].kappa_sq, t = grid.T();
    const double factor = (lam * t - 1.0 + std::exp(-lam * t)) / (lam * lam);
    CHECK(std::abs(Z.back()[i] - factor * g[i]) < 1e-13 * (1.0 + std::abs(g[i])));
  }
}

TEST_CASE("skeleton without advection matches the Stokes closed form") {
  const auto b = spectral::make_basis(3, 0.25);
  const auto noise = constant_noise(b);
  const double T = 1.0;
  // psi constant: F = sum_i psi_i vartheta_i h_i g0_i, eta(T) = (1 - e^{-lam T}) / lam F
  const double psi0 = 0.7, psi1 = -1.3;
  SpectralField F = (psi0 * 1.0 * 1.0) * noise.coefficient(SpectralField(b), 0);
  F.axpy(psi1 * 0.5, noise.coefficient(SpectralField(b), 1));
  SpectralField exact(b);
  for (std::size_t i = 0; i < b->mode_count(); ++i) {
    const double lam = 0.25 * b->modes()[i].kappa_sq;
    exact[i] = -std::expm1(-lam * T) / lam * F[i];
  }
  dynamics::SkeletonOptions so;
  so.include_advection = false;
  double prev = 0.0;
  for (int n : {10, 20, 40, 80}) {
    const TimeGrid grid(T, n);
    noise::ControlField psi = noise::ControlField::zero_psi(2, grid.n_nodes());
    for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
      psi(0, k) = psi0;
      psi(1, k) = psi1;
    }
    const auto u0 = dynamics::solve_nse(SpectralField(b), ForceSpec::zero(), grid);
    const auto eta = dynamics::solve_skeleton(psi, u0, noise, grid, so);
    const double err = h_dist(eta.back(), exact);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.1));
    prev = err;

    std::vector<SpectralField> forcing(grid.n_nodes(), F);
    CHECK(h_dist(dynamics::solve_mild_forced(forcing, grid).back(), exact) < 1e-13 * spectral::h_norm(exact));
  }
}

TEST_CASE("skeleton is linear in the control") {
  const auto b = spectral::make_basis(3, 0.1);
  Rng rng = make_rng(7);
  const TimeGrid grid(1.0, 16);
  std::vector<SpectralField> g0{random_field(b, rng), random_field(b, rng)};
  const auto noise = noise::make_affine_noise({1.0, 2.0}, {1.0, -1.0}, g0, 0.3, 2, ForceSpec::zero());
  const auto u0 = dynamics::solve_nse(random_field(b, rng), ForceSpec::zero(), grid);
  auto p = noise::ControlField::zero_psi(2, grid.n_nodes()), q = p;
  std::normal_distribution<double> nd;
  for (auto& v : p.values()) v = nd(rng);
  for (auto& v : q.values()) v = nd(rng);
  const auto lhs = dynamics::solve_skeleton(2.0 * p + (-3.0) * q, u0, noise, grid).back();
  const auto rhs = 2.0 * dynamics::solve_skeleton(p, u0, noise, grid).back() -
                   3.0 * dynamics::solve_skeleton(q, u0, noise, grid).back();
  CHECK(h_dist(lhs, rhs) < 1e-12 * (1.0 + spectral::h_norm(lhs)));
  const auto zero = dynamics::solve_skeleton(noise::ControlField::zero_psi(2, grid.n_nodes()), u0, noise, grid);
  CHECK(spectral::h_norm(zero.back()) == 0.0);
}

TEST_CASE("skeleton rejects mis-shaped controls") {
  const auto b = spectral::make_basis(2, 0.1);
  const auto noise = constant_noise(b);
  const TimeGrid grid(1.0, 8);
  const auto u0 = dynamics::solve_nse(SpectralField(b), ForceSpec::zero(), grid);
  CHECK_THROWS_AS(dynamics::solve_skeleton(noise::ControlField::zero_psi(3, grid.n_nodes()), u0, noise, grid),
                  GridMismatch);
  CHECK_THROWS_AS(dynamics::solve_skeleton(noise::ControlField::zero_psi(2, 5), u0, noise, grid), GridMismatch);
  CHECK_THROWS_AS(
      dynamics::solve_skeleton(noise::ControlField::constant_phi(2, grid.n_nodes(), 1.0), u0, noise, grid),
      InvalidArgument);
}

TEST_CASE("time grid quadrature is the trapezoid rule") {
  const TimeGrid grid(2.0, 4);
  const auto w = grid.quadrature_weights();
  REQUIRE(w.size() == 5);
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[2] == doctest::Approx(0.5));
  CHECK(w[4] == doctest::Approx(0.25));
  CHECK(grid.step_of(0.0) == 0);
  CHECK(grid.step_of(1.99) == 3);
  CHECK(grid.step_of(2.0) == 3);
}
