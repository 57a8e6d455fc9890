#pragma once

// Divergence-free Fourier-Galerkin representation of 2-D periodic velocity
// fields and the Navier-Stokes operators A, B, b and P_H.
//
// Normalization (used by every energy identity in the project):
//   u(x) = sum_k  uhat_k exp(i kappa_k . x),   kappa_k = 2 pi k / L,
//   uhat_k = i c_k kperp / |k|,                kperp = (-k2, k1),
//   |u|_H^2 = int_D |u|^2 dx = L^2 sum_k |uhat_k|^2,
//   ||u||_V^2 = int_D |grad u|^2 dx = L^2 sum_k |kappa_k|^2 |uhat_k|^2,
// where the sums run over all retained k, i.e. both k and -k.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace nse_mdp::spectral {

using complex = std::complex<double>;

/// One stored (half-plane) Fourier mode. Its partner -k is implied by reality.
struct Mode {
  int k1 = 0;
  int k2 = 0;
  double kx = 0.0;      ///< 2 pi k1 / L
  double ky = 0.0;      ///< 2 pi k2 / L
  double kappa_sq = 0;  ///< kx^2 + ky^2
  double kappa = 0;
};

class Basis {
 public:
  /// Modes 0 < max(|k1|,|k2|) <= N on the torus [0,L)^2.
  Basis(int N, double nu, double L = 2.0 * 3.14159265358979323846, double dealias_factor = 1.5);

  int N() const noexcept { return n_; }
  double nu() const noexcept { return nu_; }
  double L() const noexcept { return l_; }
  double dealias_factor() const noexcept { return dealias_; }

  /// Padded physical grid used for quadratic products: ceil(dealias * (2N+1)).
  int grid_size() const noexcept { return grid_; }
  /// Grid on which quartic integrands (L^4 norm) are integrated exactly.
  int quadrature_size() const noexcept { return quad_; }

  std::size_t mode_count() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  /// Index of the stored mode representing (k1,k2), or -1 if (k1,k2) is
  /// outside the truncation. `conjugate` is set when (-k1,-k2) is stored.
  long find(int k1, int k2, bool& conjugate) const noexcept;

  /// exp(-nu |kappa|^2 t) per stored mode.
  std::vector<double> stokes_decay(double t) const;

  bool operator==(const Basis& other) const noexcept;

 private:
  int n_;
  double nu_;
  double l_;
  double dealias_;
  int grid_;
  int quad_;
  std::vector<Mode> modes_;
  std::vector<long> lookup_;  // (2N+1)^2 table: index into modes_ or -1
};

using BasisPtr = std::shared_ptr<const Basis>;

BasisPtr make_basis(int N, double nu, double L = 2.0 * 3.14159265358979323846,
                    double dealias_factor = 1.5);

/// Velocity field stored as one complex stream-function-like scalar per
/// half-plane mode. Divergence-free and mean-zero by construction.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(BasisPtr basis);
  SpectralField(BasisPtr basis, std::vector<complex> coeffs);

  const Basis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  bool empty() const noexcept { return !basis_; }

  std::size_t size() const noexcept { return coeffs_.size(); }
  std::span<const complex> coeffs() const noexcept { return coeffs_; }
  std::span<complex> coeffs() noexcept { return coeffs_; }
  complex operator[](std::size_t i) const { return coeffs_[i]; }
  complex& operator[](std::size_t i) { return coeffs_[i]; }

  /// Velocity Fourier coefficient uhat_k of the stored mode i.
  std::array<complex, 2> velocity_coeff(std::size_t i) const;

  /// Coefficient c_k for an arbitrary k (conjugate partner or zero if truncated).
  complex coefficient(int k1, int k2) const;
  void set_coefficient(int k1, int k2, complex value);

  bool is_finite() const noexcept;
  double max_abs_coeff() const noexcept;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);
  /// this += s * other
  SpectralField& axpy(double s, const SpectralField& other);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

  bool operator==(const SpectralField& other) const;

 private:
  BasisPtr basis_;
  std::vector<complex> coeffs_;
};

SpectralField zeros_like(const SpectralField& u);

/// Throws BasisMismatch unless both fields live on equal bases.
void require_same_basis(const SpectralField& a, const SpectralField& b);

/// Real vector field sampled on an M x M grid, x_i = i L / M, index i*M + j.
struct PhysicalField {
  int M = 0;
  std::vector<double> ux;
  std::vector<double> uy;
};

struct Norms {
  double h = 0.0;   ///< |u|_H
  double v = 0.0;   ///< ||u||_V
  double l4 = 0.0;  ///< ||u||_{L^4}
};

double inner_h(const SpectralField& u, const SpectralField& w);
/// int grad u : grad w dx
double inner_v(const SpectralField& u, const SpectralField& w);
double h_norm(const SpectralField& u);
double v_norm(const SpectralField& u);
double l4_norm(const SpectralField& u);
Norms norms(const SpectralField& u);

/// Au = -nu P_H Delta u, diagonal: (Au)_k = nu |kappa|^2 u_k.
SpectralField apply_stokes(const SpectralField& u);
/// exp(-A t) u
SpectralField stokes_semigroup(const SpectralField& u, double t);

/// B(u,v) = P_H((u . grad) v), pseudo-spectral on the padded grid.
SpectralField nonlinear_B(const SpectralField& u, const SpectralField& v);
/// B(u) = B(u,u)
SpectralField nonlinear_B(const SpectralField& u);
/// P_H( sum_j y_j grad u_j ): the H-adjoint of x -> B(x, u).
SpectralField advection_transpose(const SpectralField& u, const SpectralField& y);

/// b(u,v,w) = int u_i d_i v_j w_j dx
double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w);

/// Samples the velocity on an M x M grid (M >= 2N+1).
PhysicalField to_physical(const SpectralField& u, int M);
/// Samples on the basis' padded grid.
PhysicalField to_physical(const SpectralField& u);

/// Leray projection of a vector field sampled on the basis' padded grid:
/// drops the mean, the gradient part of each mode and modes beyond N.
SpectralField project_leray(const PhysicalField& raw, const BasisPtr& basis);

}  // namespace nse_mdp::spectral
