#pragma once

// Deterministic time integration: the Navier-Stokes limit equation, the
// linearized skeleton equation and the forced Stokes (mild solution) problem.
//
// All steppers use the exponential integrating factor exp(-A dt), exact per
// mode, with a two-stage Heun update for the explicit part:
//   k1 = N(u_n, t_n)
//   s  = E (u_n + dt k1)
//   k2 = N(s, t_{n+1})
//   u_{n+1} = E u_n + dt/2 (E k1 + k2),       E = exp(-A dt).

#include <cstddef>
#include <vector>

#include "nse_mdp/noise.hpp"
#include "nse_mdp/spectral.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::dynamics {

using spectral::SpectralField;

struct NseOptions {
  double energy_cap = 1e6;             ///< reject u0 with |u0|_H^2 above this
  double divergence_threshold = 1e8;   ///< abort when any |c_k| exceeds this
};

/// One step of du + Au dt + B(u) dt = f dt on a fixed grid.
class NseStepper {
 public:
  NseStepper(spectral::BasisPtr basis, const ForceSpec& f, const TimeGrid& grid);

  /// u(t_n) -> u(t_{n+1})
  SpectralField step(const SpectralField& u, std::size_t n) const;

  const TimeGrid& grid() const noexcept { return grid_; }
  /// f(t_n), or an empty field when f == 0.
  const SpectralField& force(std::size_t n) const { return forces_[n]; }

 private:
  spectral::BasisPtr basis_;
  TimeGrid grid_;
  std::vector<double> decay_;
  std::vector<SpectralField> forces_;
};

/// Throws DivergedRun if u is non-finite or exceeds the threshold.
void check_divergence(const SpectralField& u, double threshold, std::size_t step);

Trajectory solve_nse(const SpectralField& u0, const ForceSpec& f, const TimeGrid& grid,
                     const NseOptions& opts = {});

/// |u_N|^2 + 2 nu int ||u||^2 - |u_0|^2 - 2 int (f, u), trapezoid in time.
double energy_balance_residual(const Trajectory& traj, const ForceSpec& f);

/// Advective CFL number max|u| dt / dx on the padded grid.
double cfl_number(const SpectralField& u, double dt);

/// G(u0(t_n), y_i) for every node n and mark i.
struct SkeletonCoefficients {
  std::vector<std::vector<SpectralField>> G;  ///< [node][mark]

  static SkeletonCoefficients build(const Trajectory& u0, const noise::NoiseModel& noise);
};

/// sum_i psi(y_i, t_n) vartheta_i G(u0(t_n), y_i)
SpectralField skeleton_forcing(const noise::ControlField& psi, const SkeletonCoefficients& coeffs,
                               const noise::MarkSpace& marks, std::size_t node);

/// Stepper of d eta/dt = -A eta + L_n eta + F(t), L_n eta = -B(eta,u0_n) - B(u0_n,eta),
/// and its exact discrete transpose.
class LinearizedStepper {
 public:
  LinearizedStepper(Trajectory base, const TimeGrid& grid, bool include_advection = true);

  /// eta_{n+1} given eta_n and the forcing at both ends of the step.
  SpectralField step(const SpectralField& eta, const SpectralField& F_n, const SpectralField& F_n1,
                     std::size_t n) const;

  struct AdjointStep {
    SpectralField lambda;  ///< sensitivity with respect to eta_n
    SpectralField bar_F_n;
    SpectralField bar_F_n1;
  };
  /// Transpose of `step` in the H inner product, given the sensitivity of eta_{n+1}.
  AdjointStep adjoint_step(const SpectralField& lambda_next, std::size_t n) const;

  const TimeGrid& grid() const noexcept { return grid_; }
  const spectral::BasisPtr& basis() const noexcept { return basis_; }
  const Trajectory& base() const noexcept { return base_; }

 private:
  SpectralField apply_L(const SpectralField& x, std::size_t node) const;
  SpectralField apply_L_adjoint(const SpectralField& y, std::size_t node) const;
  SpectralField decay(const SpectralField& x) const;

  spectral::BasisPtr basis_;
  TimeGrid grid_;
  Trajectory base_;
  bool advection_;
  std::vector<double> decay_;
};

struct SkeletonOptions {
  bool include_advection = true;  ///< false drops the B terms (forced Stokes)
};

/// eta = G0(psi): solution of the skeleton equation with eta(0) = 0.
Trajectory solve_skeleton(const noise::ControlField& psi, const Trajectory& u0_traj,
                          const noise::NoiseModel& noise, const TimeGrid& grid,
                          const SkeletonOptions& opts = {});

/// Z' = -A Z + f, Z(0) = 0, with f linearly interpolated between nodes and
/// integrated exactly against exp(-A (t-s)).
Trajectory solve_mild_forced(const std::vector<SpectralField>& forcing, const TimeGrid& grid);

}  // namespace nse_mdp::dynamics
