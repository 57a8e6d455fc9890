#pragma once

// Least-norm control of the discrete skeleton map Lambda: psi -> eta(T).
//
// The rate of a terminal state z is I(z) = min { 1/2 |psi|^2 : Lambda psi = z },
// attained at psi* = Lambda^* w with Lambda Lambda^* w = z. The normal
// operator is applied matrix-free (one backward and one forward sweep) and
// inverted with conjugate gradients in the H inner product.

#include <cstdint>
#include <optional>
#include <vector>

#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/errors.hpp"
#include "nse_mdp/noise.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::rate {

using spectral::SpectralField;

/// Frozen (u0 trajectory, noise, grid). Immutable and safe to share
/// between threads.
class SkeletonOperator {
 public:
  SkeletonOperator(Trajectory u0_traj, noise::NoiseModel noise, const TimeGrid& grid,
                   bool include_advection = true);

  /// eta(T) for a psi control.
  SpectralField apply_forward(const noise::ControlField& psi) const;
  /// Whole eta trajectory.
  Trajectory apply_forward_path(const noise::ControlField& psi) const;
  /// Exact transpose of apply_forward: <Lambda psi, v>_H = <psi, Lambda^* v>_{L^2(vartheta_T)}.
  noise::ControlField apply_adjoint(const SpectralField& v) const;
  /// Lambda Lambda^* v
  SpectralField apply_normal(const SpectralField& v) const;

  const spectral::BasisPtr& basis() const noexcept { return basis_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const noise::NoiseModel& noise() const noexcept { return noise_; }
  const Trajectory& base() const noexcept { return stepper_.base(); }

  /// L^2(vartheta_T) norm and inner product on this operator's grid and marks.
  double control_inner(const noise::ControlField& a, const noise::ControlField& b) const;
  double control_norm(const noise::ControlField& a) const;

 private:
  spectral::BasisPtr basis_;
  noise::NoiseModel noise_;
  TimeGrid grid_;
  dynamics::LinearizedStepper stepper_;
  dynamics::SkeletonCoefficients coeffs_;
  std::vector<double> weights_;
};

struct RateOptions {
  double tol = 1e-8;      ///< relative residual |Lambda psi* - z| / |z|
  int max_iter = 0;       ///< 0: four times the real dimension of the basis
  double tikhonov = 0.0;  ///< mu in (Lambda Lambda^* + mu) w = z
};

struct RateResult {
  double I = 0.0;
  noise::ControlField psi_star;
  SpectralField w;           ///< multiplier with psi* = Lambda^* w
  double residual = 0.0;     ///< |Lambda psi* - z|_H
  double rel_residual = 0.0; ///< residual / |z|_H
  int iterations = 0;
  bool regularized = false;
};

/// CG did not reach the tolerance; carries the best iterate.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, RateResult best) : Error(what), best_(std::move(best)) {}
  const RateResult& best() const noexcept { return best_; }

 private:
  RateResult best_;
};

RateResult rate_terminal(const SkeletonOperator& op, const SpectralField& target, const RateOptions& opts = {});

/// CG objective J(w) = 1/2 <w, (Lambda Lambda^* + mu) w> - <z, w> and its gradient.
double normal_objective(const SkeletonOperator& op, const SpectralField& w, const SpectralField& target,
                        double mu = 0.0);
SpectralField normal_gradient(const SkeletonOperator& op, const SpectralField& w, const SpectralField& target,
                              double mu = 0.0);

/// Largest eigenvalue of Lambda Lambda^* and a unit eigenvector, by power iteration.
struct DominantMode {
  double eigenvalue = 0.0;
  SpectralField direction;
  int iterations = 0;
};
DominantMode dominant_direction(const SkeletonOperator& op, std::uint64_t seed = 1, int max_iter = 500,
                                double tol = 1e-12);

struct LevelSetOptions {
  int n_random = 32;
  std::uint64_t seed = 7;
  bool use_dominant = true;  ///< add the power-iteration direction to the set
  RateOptions rate;
};

struct LevelSetResult {
  double I_min = 0.0;
  SpectralField direction;  ///< unit |d|_H = 1
  SpectralField target;     ///< r d
  std::size_t directions_tried = 0;
  std::size_t directions_failed = 0;  ///< outside the range of Lambda (I = +inf)
};

/// min over the direction set of I(r d) = r^2 I(d).
LevelSetResult rate_level_set(const SkeletonOperator& op, double r, const LevelSetOptions& opts = {});

}  // namespace nse_mdp::rate
