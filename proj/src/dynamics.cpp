#include "nse_mdp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "nse_mdp/errors.hpp"

namespace nse_mdp::dynamics {

namespace {

void scale_by(SpectralField& x, const std::vector<double>& d) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= d[i];
}

}  // namespace

NseStepper::NseStepper(spectral::BasisPtr basis, const ForceSpec& f, const TimeGrid& grid)
    : basis_(std::move(basis)), grid_(grid), decay_(basis_->stokes_decay(grid.dt())) {
  forces_.resize(grid.n_nodes());
  if (!f.is_zero()) {
    for (std::size_t n = 0; n < grid.n_nodes(); ++n) {
      forces_[n] = f(grid.time(n));
      if (!(forces_[n].basis() == *basis_)) throw BasisMismatch("force lives on a different basis");
    }
  }
}

SpectralField NseStepper::step(const SpectralField& u, std::size_t n) const {
  const double dt = grid_.dt();
  SpectralField k1 = spectral::nonlinear_B(u);
  k1 *= -1.0;
  if (!forces_[n].empty()) k1 += forces_[n];

  SpectralField stage = u;
  stage.axpy(dt, k1);
  scale_by(stage, decay_);

  SpectralField k2 = spectral::nonlinear_B(stage);
  k2 *= -1.0;
  if (!forces_[n + 1].empty()) k2 += forces_[n + 1];

  SpectralField next = u;
  next.axpy(0.5 * dt, k1);
  scale_by(next, decay_);
  next.axpy(0.5 * dt, k2);
  return next;
}

void check_divergence(const SpectralField& u, double threshold, std::size_t step) {
  if (!u.is_finite())
    throw DivergedRun(fmt::format("non-finite coefficient at step {}", step), step);
  if (u.max_abs_coeff() > threshold)
    throw DivergedRun(fmt::format("coefficient above {:.3g} at step {}", threshold, step), step);
}

Trajectory solve_nse(const SpectralField& u0, const ForceSpec& f, const TimeGrid& grid, const NseOptions& opts) {
  const double e0 = spectral::inner_h(u0, u0);
  if (e0 > opts.energy_cap)
    throw InvalidArgument(fmt::format("solve_nse: |u0|^2 = {:.4g} exceeds the energy cap {:.4g}", e0,
                                      opts.energy_cap));
  NseStepper stepper(u0.basis_ptr(), f, grid);
  Trajectory out{0.0, grid.dt(), {}};
  out.fields.reserve(grid.n_nodes());
  out.fields.push_back(u0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(grid.n_steps()); ++n) {
    SpectralField next = stepper.step(out.fields.back(), n);
    check_divergence(next, opts.divergence_threshold, n + 1);
    out.fields.push_back(std::move(next));
  }
  return out;
}

double energy_balance_residual(const Trajectory& traj, const ForceSpec& f) {
  const std::size_t n = traj.size();
  if (n < 2) return 0.0;
  const double nu = traj.fields.front().basis().nu();
  double dissipation = 0.0, work = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * traj.dt;
    const auto& u = traj.fields[i];
    dissipation += w * spectral::inner_v(u, u);
    if (!f.is_zero()) work += w * spectral::inner_h(f(traj.t0 + i * traj.dt), u);
  }
  return spectral::inner_h(traj.back(), traj.back()) + 2.0 * nu * dissipation -
         spectral::inner_h(traj.fields.front(), traj.fields.front()) - 2.0 * work;
}

double cfl_number(const SpectralField& u, double dt) {
  const auto phys = spectral::to_physical(u);
  double vmax = 0.0;
  for (std::size_t j = 0; j < phys.ux.size(); ++j)
    vmax = std::max(vmax, std::hypot(phys.ux[j], phys.uy[j]));
  return vmax * dt * phys.M / u.basis().L();
}

SkeletonCoefficients SkeletonCoefficients::build(const Trajectory& u0, const noise::NoiseModel& noise) {
  SkeletonCoefficients out;
  out.G.resize(u0.size());
  for (std::size_t n = 0; n < u0.size(); ++n) {
    out.G[n].reserve(noise.marks.size());
    for (std::size_t i = 0; i < noise.marks.size(); ++i) out.G[n].push_back(noise.coefficient(u0.fields[n], i));
  }
  return out;
}

SpectralField skeleton_forcing(const noise::ControlField& psi, const SkeletonCoefficients& coeffs,
                               const noise::MarkSpace& marks, std::size_t node) {
  const auto& G = coeffs.G.at(node);
  SpectralField F = spectral::zeros_like(G.at(0));
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double w = psi(i, node) * marks.weight(i);
    if (w != 0.0) F.axpy(w, G[i]);
  }
  return F;
}

LinearizedStepper::LinearizedStepper(Trajectory base, const TimeGrid& grid, bool include_advection)
    : basis_(base.basis_ptr()),
      grid_(grid),
      base_(std::move(base)),
      advection_(include_advection),
      decay_(basis_->stokes_decay(grid.dt())) {
  require_on_grid(base_, grid_);
}

SpectralField LinearizedStepper::decay(const SpectralField& x) const {
  SpectralField out = x;
  scale_by(out, decay_);
  return out;
}

SpectralField LinearizedStepper::apply_L(const SpectralField& x, std::size_t node) const {
  if (!advection_) return spectral::zeros_like(x);
  const SpectralField& u0 = base_.fields[node];
  SpectralField out = spectral::nonlinear_B(x, u0);
  out += spectral::nonlinear_B(u0, x);
  out *= -1.0;
  return out;
}

// <B(x,u0), y> = <x, P_H (grad u0)^T y>,  <B(u0,x), y> = -<x, B(u0,y)>.
SpectralField LinearizedStepper::apply_L_adjoint(const SpectralField& y, std::size_t node) const {
  if (!advection_) return spectral::zeros_like(y);
  const SpectralField& u0 = base_.fields[node];
  SpectralField out = spectral::nonlinear_B(u0, y);
  out -= spectral::advection_transpose(u0, y);
  return out;
}

SpectralField LinearizedStepper::step(const SpectralField& eta, const SpectralField& F_n, const SpectralField& F_n1,
                                      std::size_t n) const {
  const double dt = grid_.dt();
  SpectralField k1 = apply_L(eta, n);
  if (!F_n.empty()) k1 += F_n;

  SpectralField stage = eta;
  stage.axpy(dt, k1);
  scale_by(stage, decay_);

  SpectralField k2 = apply_L(stage, n + 1);
  if (!F_n1.empty()) k2 += F_n1;

  SpectralField next = eta;
  next.axpy(0.5 * dt, k1);
  scale_by(next, decay_);
  next.axpy(0.5 * dt, k2);
  return next;
}

LinearizedStepper::AdjointStep LinearizedStepper::adjoint_step(const SpectralField& lambda_next,
                                                               std::size_t n) const {
  const double dt = grid_.dt();
  AdjointStep out;
  SpectralField bar_k2 = 0.5 * dt * lambda_next;
  SpectralField bar_s = apply_L_adjoint(bar_k2, n + 1);

  SpectralField bar_k1 = decay(lambda_next);
  bar_k1 *= 0.5 * dt;
  bar_k1.axpy(dt, decay(bar_s));

  out.lambda = decay(lambda_next);
  out.lambda += decay(bar_s);
  out.lambda += apply_L_adjoint(bar_k1, n);
  out.bar_F_n = std::move(bar_k1);
  out.bar_F_n1 = std::move(bar_k2);
  return out;
}

Trajectory solve_skeleton(const noise::ControlField& psi, const Trajectory& u0_traj, const noise::NoiseModel& noise,
                          const TimeGrid& grid, const SkeletonOptions& opts) {
  require_on_grid(u0_traj, grid);
  noise::require_shape(psi, noise.marks, grid);
  if (psi.kind() != noise::ControlField::Kind::Psi) throw InvalidArgument("solve_skeleton: expects a psi control");
  const auto coeffs = SkeletonCoefficients::build(u0_traj, noise);
  LinearizedStepper stepper(u0_traj, grid, opts.include_advection);

  Trajectory out{0.0, grid.dt(), {}};
  out.fields.reserve(grid.n_nodes());
  out.fields.emplace_back(u0_traj.basis_ptr());
  const bool has_marks = noise.marks.size() > 0;
  SpectralField F_prev = has_marks ? skeleton_forcing(psi, coeffs, noise.marks, 0) : SpectralField{};
  for (std::size_t n = 0; n < static_cast<std::size_t>(grid.n_steps()); ++n) {
    SpectralField F_next = has_marks ? skeleton_forcing(psi, coeffs, noise.marks, n + 1) : SpectralField{};
    out.fields.push_back(stepper.step(out.fields.back(), F_prev, F_next, n));
    F_prev = std::move(F_next);
  }
  return out;
}

namespace {

// phi_1(-z) = (1 - e^{-z})/z and phi_2(-z) = (e^{-z} - 1 + z)/z^2.
std::pair<double, double> phi12(double z) {
  if (z < 1e-2) {
    double p1 = 0.0, p2 = 0.0, term = 1.0, fact1 = 1.0, fact2 = 2.0;
    for (int k = 0; k < 12; ++k) {
      p1 += term / fact1;
      p2 += term / fact2;
      term *= -z;
      fact1 *= (k + 2);
      fact2 *= (k + 3);
    }
    return {p1, p2};
  }
  const double em = -std::expm1(-z);  // 1 - e^{-z}
  return {em / z, (z - em) / (z * z)};
}

}  // namespace

Trajectory solve_mild_forced(const std::vector<SpectralField>& forcing, const TimeGrid& grid) {
  if (forcing.size() != grid.n_nodes()) throw GridMismatch("solve_mild_forced: forcing not on the time grid");
  for (const auto& f : forcing) spectral::require_same_basis(forcing.front(), f);
  const auto& basis = forcing.front().basis();
  const double h = grid.dt();
  const auto decay = basis.stokes_decay(h);
  std::vector<double> wa(basis.mode_count()), wb(basis.mode_count());
  for (std::size_t i = 0; i < basis.mode_count(); ++i) {
    const auto [p1, p2] = phi12(basis.nu() * basis.modes()[i].kappa_sq * h);
    wa[i] = h * (p1 - p2);
    wb[i] = h * p2;
  }
  Trajectory out{0.0, h, {}};
  out.fields.reserve(grid.n_nodes());
  out.fields.emplace_back(forcing.front().basis_ptr());
  for (std::size_t n = 0; n + 1 < grid.n_nodes(); ++n) {
    SpectralField next = out.fields.back();
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = decay[i] * next[i] + wa[i] * forcing[n][i] + wb[i] * forcing[n + 1][i];
    out.fields.push_back(std::move(next));
  }
  return out;
}

}  // namespace nse_mdp::dynamics
