#include "nse_mdp/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "nse_mdp/errors.hpp"

namespace nse_mdp::stochastic {

ScalingSpec::ScalingSpec(double eps, double gamma) : eps_(eps), gamma_(gamma) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("scaling: eps must lie in (0,1]");
  if (!(gamma > 0.0 && gamma < 0.5))
    throw InvalidArgument("scaling: gamma must lie in (0,1/2) so that a -> 0 and eps/a^2 -> 0");
  a_ = std::pow(eps, gamma);
}

SimulationResult simulate_controlled_X(const ScalingSpec& scaling, const SpectralField& u0,
                                       const noise::NoiseModel& noise, const noise::ControlField& phi_in,
                                       const TimeGrid& grid, std::uint64_t seed, const SimulationOptions& opts) {
  const noise::ControlField phi = phi_in.to_phi(scaling.a());
  noise::require_shape(phi, noise.marks, grid);
  if (phi.min_value() < 0.0) throw InvalidArgument("simulate: intensity phi must be nonnegative");
  const double r_max = opts.r_max > 0.0 ? opts.r_max : std::max(1.0, phi.max_value());
  if (r_max < phi.max_value())
    throw InvalidArgument(fmt::format("simulate: r_max {} below max phi {}", r_max, phi.max_value()));

  const double e0 = spectral::inner_h(u0, u0);
  if (e0 > opts.energy_cap)
    throw InvalidArgument(fmt::format("simulate: |u0|^2 = {:.4g} exceeds the energy cap", e0));

  const double eps = scaling.eps();
  const std::size_t n_marks = noise.marks.size();
  const std::size_t n_steps = static_cast<std::size_t>(grid.n_steps());
  const double dt = grid.dt();

  SimulationResult result;
  // dN[n * n_marks + i]
  std::vector<double> dN(n_steps * n_marks, 0.0);
  if (!noise.zero_noise() && n_marks > 0) {
    Rng rng = make_rng(seed);
    noise::SampleOptions so;
    so.event_cap = opts.event_budget;
    const noise::JumpStream base = noise::sample_prm(r_max / eps, noise.marks, grid, rng, so);
    noise::JumpStream kept = noise::thin_to_control(base, phi, grid, 1.0 / eps);
    for (const auto& e : kept.events) dN[grid.step_of(e.t) * n_marks + e.mark] += 1.0;
    result.n_events = kept.size();
    if (opts.keep_jumps) result.jumps = std::move(kept);
  }

  dynamics::NseStepper stepper(u0.basis_ptr(), noise.f, grid);
  Trajectory& path = result.path;
  path.t0 = 0.0;
  path.dt = dt;
  path.fields.reserve(grid.n_nodes());
  path.fields.push_back(u0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const SpectralField& prev = path.fields.back();
    SpectralField next = stepper.step(prev, n);
    if (!noise.zero_noise()) {
      for (std::size_t i = 0; i < n_marks; ++i) {
        const double weight = eps * dN[n * n_marks + i] - noise.marks.weight(i) * dt;
        next.axpy(weight, noise.coefficient(prev, i));
      }
    }
    dynamics::check_divergence(next, opts.divergence_threshold, n + 1);
    path.fields.push_back(std::move(next));
  }
  return result;
}

SimulationResult simulate_u_eps(const ScalingSpec& scaling, const SpectralField& u0, const noise::NoiseModel& noise,
                                const TimeGrid& grid, std::uint64_t seed, SimulationOptions opts) {
  opts.r_max = 1.0;
  const auto unit = noise::ControlField::constant_phi(noise.marks.size(), grid.n_nodes(), 1.0);
  return simulate_controlled_X(scaling, u0, noise, unit, grid, seed, opts);
}

Trajectory moderate_process(const Trajectory& x, const Trajectory& u0, const ScalingSpec& scaling) {
  Trajectory y = difference(x, u0);
  const double inv_a = 1.0 / scaling.a();
  for (auto& f : y.fields) f *= inv_a;
  return y;
}

namespace {

MomentRow reduce(const std::string& name, std::vector<double> values) {
  std::sort(values.begin(), values.end());
  MomentRow row;
  row.metric = name;
  row.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.variance = values.size() > 1 ? ss / (values.size() - 1) : 0.0;
  row.max = values.back();
  return row;
}

}  // namespace

MomentTable ensemble_stats(const std::vector<RunRecord>& runs) {
  if (runs.size() < 2) throw InvalidArgument("ensemble_stats: need at least two runs");
  for (const auto& r : runs)
    if (r.config_hash != runs.front().config_hash)
      throw InvalidArgument(fmt::format("ensemble_stats: config hash {} differs from {}", r.config_hash,
                                        runs.front().config_hash));
  std::vector<double> sup_h2, int_v2, th, tv;
  for (const auto& r : runs) {
    sup_h2.push_back(r.diagnostics.sup_h2);
    int_v2.push_back(r.diagnostics.int_v2);
    th.push_back(r.diagnostics.terminal_h);
    tv.push_back(r.diagnostics.terminal_v);
  }
  MomentTable table;
  table.config_hash = runs.front().config_hash;
  table.rows.push_back(reduce("sup_h2", std::move(sup_h2)));
  table.rows.push_back(reduce("int_v2", std::move(int_v2)));
  table.rows.push_back(reduce("terminal_h", std::move(th)));
  table.rows.push_back(reduce("terminal_v", std::move(tv)));
  return table;
}

}  // namespace nse_mdp::stochastic
