#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nse_mdp/spectral.hpp"

namespace nse_mdp {

/// Uniform grid t_n = n T / n_steps, n = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid(double T, int n_steps);

  double T() const noexcept { return t_; }
  int n_steps() const noexcept { return n_; }
  std::size_t n_nodes() const noexcept { return static_cast<std::size_t>(n_) + 1; }
  double dt() const noexcept { return t_ / n_; }
  double time(std::size_t n) const noexcept { return n == static_cast<std::size_t>(n_) ? t_ : dt() * n; }
  /// Step index of the interval [t_n, t_{n+1}) containing t.
  std::size_t step_of(double t) const noexcept;

  /// Trapezoid weights: the quadrature of the L^2(vartheta_T) time integral.
  std::vector<double> quadrature_weights() const;

  bool operator==(const TimeGrid& o) const noexcept { return t_ == o.t_ && n_ == o.n_; }

 private:
  double t_;
  int n_;
};

/// f(t) for the deterministic forcing; any rule that yields a field per time.
class ForceSpec {
 public:
  using Rule = std::function<spectral::SpectralField(double)>;

  ForceSpec() = default;
  explicit ForceSpec(Rule rule) : rule_(std::move(rule)) {}

  static ForceSpec zero();
  static ForceSpec constant(spectral::SpectralField f);
  /// f(t) = cos(omega t) f0
  static ForceSpec modulated(spectral::SpectralField f0, double omega);

  bool is_zero() const noexcept { return !rule_; }
  /// Returns an empty field for the zero force; callers treat that as 0.
  spectral::SpectralField operator()(double t) const;

 private:
  Rule rule_;
};

struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<spectral::SpectralField> fields;

  std::size_t size() const noexcept { return fields.size(); }
  const spectral::SpectralField& back() const { return fields.back(); }
  const spectral::BasisPtr& basis_ptr() const { return fields.front().basis_ptr(); }
};

/// Throws GridMismatch unless the trajectory has grid.n_nodes() fields with
/// step grid.dt().
void require_on_grid(const Trajectory& traj, const TimeGrid& grid);

/// Scalar summaries used by moment bounds and ensembles.
struct PathDiagnostics {
  double sup_h2 = 0.0;      ///< max_n |u_n|_H^2
  double int_v2 = 0.0;      ///< trapezoid int ||u||_V^2 dt
  double terminal_h = 0.0;  ///< |u_N|_H
  double terminal_v = 0.0;  ///< ||u_N||_V
};

PathDiagnostics path_diagnostics(const Trajectory& traj);

/// Pointwise a - b (same grid and basis).
Trajectory difference(const Trajectory& a, const Trajectory& b);

}  // namespace nse_mdp
