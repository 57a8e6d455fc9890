#include "nse_mdp/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "nse_mdp/errors.hpp"

namespace nse_mdp {

TimeGrid::TimeGrid(double T, int n_steps) : t_(T), n_(n_steps) {
  if (!(T > 0.0)) throw InvalidArgument("time grid: horizon must be positive");
  if (n_steps < 1) throw InvalidArgument("time grid: need at least one step");
}

std::size_t TimeGrid::step_of(double t) const noexcept {
  const double x = std::floor(t / dt());
  if (x < 0.0) return 0;
  return std::min(static_cast<std::size_t>(x), static_cast<std::size_t>(n_ - 1));
}

std::vector<double> TimeGrid::quadrature_weights() const {
  std::vector<double> w(n_nodes(), dt());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

ForceSpec ForceSpec::zero() { return ForceSpec(); }

ForceSpec ForceSpec::constant(spectral::SpectralField f) {
  return ForceSpec([f = std::move(f)](double) { return f; });
}

ForceSpec ForceSpec::modulated(spectral::SpectralField f0, double omega) {
  return ForceSpec([f0 = std::move(f0), omega](double t) { return std::cos(omega * t) * f0; });
}

spectral::SpectralField ForceSpec::operator()(double t) const {
  if (!rule_) return {};
  return rule_(t);
}

void require_on_grid(const Trajectory& traj, const TimeGrid& grid) {
  if (traj.size() != grid.n_nodes() || std::abs(traj.dt - grid.dt()) > 1e-14 * grid.dt())
    throw GridMismatch("trajectory does not match the time grid");
}

PathDiagnostics path_diagnostics(const Trajectory& traj) {
  PathDiagnostics d;
  const std::size_t n = traj.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = traj.fields[i];
    const double h2 = spectral::inner_h(u, u);
    const double v2 = spectral::inner_v(u, u);
    d.sup_h2 = std::max(d.sup_h2, h2);
    if (n > 1) d.int_v2 += ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * traj.dt * v2;
  }
  d.terminal_h = spectral::h_norm(traj.back());
  d.terminal_v = spectral::v_norm(traj.back());
  return d;
}

Trajectory difference(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.dt != b.dt) throw GridMismatch("trajectories on different grids");
  Trajectory out{a.t0, a.dt, {}};
  out.fields.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.fields.push_back(a.fields[i] - b.fields[i]);
  return out;
}

}  // namespace nse_mdp
