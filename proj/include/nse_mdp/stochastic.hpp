#pragma once

// Fixed-grid simulation of the jump-driven Navier-Stokes system
//   du = (-Au - B(u) + f) dt + eps int_X G(u(t-), y) Ntilde^{phi/eps}(dt dy)
//        + int_X G(u, y) (phi - 1) vartheta(dy) dt,
// with phi == 1 for the uncontrolled process u^eps. Each step applies the
// deterministic drift update and then the jump increment
//   sum_i G(u_n, y_i) (eps dN_i - vartheta_i dt),
// where dN_i counts the atoms of the thinned Poisson stream in [t_n, t_{n+1}).

#include <cstdint>
#include <string>
#include <vector>

#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/noise.hpp"
#include "nse_mdp/sampling.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::stochastic {

using spectral::SpectralField;

/// eps in (0,1], a(eps) = eps^gamma with gamma in (0, 1/2).
class ScalingSpec {
 public:
  ScalingSpec(double eps, double gamma = 0.4);

  double eps() const noexcept { return eps_; }
  double gamma() const noexcept { return gamma_; }
  double a() const noexcept { return a_; }
  /// LDP speed eps / a(eps)^2.
  double speed() const noexcept { return eps_ / (a_ * a_); }

 private:
  double eps_;
  double gamma_;
  double a_;
};

struct SimulationOptions {
  double r_max = 0.0;  ///< thinning ceiling for phi; 0 picks max(1, max phi)
  double event_budget = 1e7;
  double divergence_threshold = 1e8;
  double energy_cap = 1e6;
  bool keep_jumps = false;  ///< retain the realized (thinned) jump stream
};

struct SimulationResult {
  Trajectory path;
  noise::JumpStream jumps;  ///< empty unless keep_jumps
  std::size_t n_events = 0;
};

/// X^eps driven by N^{phi/eps}. `phi` may be stored as phi or psi.
SimulationResult simulate_controlled_X(const ScalingSpec& scaling, const SpectralField& u0,
                                       const noise::NoiseModel& noise, const noise::ControlField& phi,
                                       const TimeGrid& grid, std::uint64_t seed,
                                       const SimulationOptions& opts = {});

/// u^eps: the controlled process with phi == 1 and r_max = 1.
SimulationResult simulate_u_eps(const ScalingSpec& scaling, const SpectralField& u0, const noise::NoiseModel& noise,
                                const TimeGrid& grid, std::uint64_t seed, SimulationOptions opts = {});

/// (x(t) - u0(t)) / a(eps)
Trajectory moderate_process(const Trajectory& x, const Trajectory& u0, const ScalingSpec& scaling);

/// Scalars of one simulated path.
struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t replica = 0;
  PathDiagnostics diagnostics;
};

struct MomentRow {
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double max = 0.0;
};

struct MomentTable {
  std::string config_hash;
  std::vector<MomentRow> rows;  ///< sup_h2, int_v2, terminal_h, terminal_v
};

/// Mean/variance/max of the path scalars. Values are sorted before
/// reduction, so the result does not depend on the order of `runs`.
MomentTable ensemble_stats(const std::vector<RunRecord>& runs);

}  // namespace nse_mdp::stochastic
