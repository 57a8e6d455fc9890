#include "nse_mdp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "nse_mdp/errors.hpp"

namespace nse_mdp::spectral {

using detail::cbuf;
using detail::wrap;

Basis::Basis(int N, double nu, double L, double dealias_factor)
    : n_(N), nu_(nu), l_(L), dealias_(dealias_factor) {
  if (N < 1) throw InvalidArgument("basis: N must be >= 1");
  if (!(nu > 0.0)) throw InvalidArgument("basis: viscosity must be positive");
  if (!(L > 0.0)) throw InvalidArgument("basis: period must be positive");
  if (!(dealias_factor >= 1.5)) throw InvalidArgument("basis: dealias factor must be >= 3/2");
  grid_ = static_cast<int>(std::ceil(dealias_factor * (2 * N + 1) - 1e-12));
  quad_ = 4 * N + 2;

  const double scale = 2.0 * std::numbers::pi / L;
  auto push = [&](int k1, int k2) {
    Mode m;
    m.k1 = k1;
    m.k2 = k2;
    m.kx = scale * k1;
    m.ky = scale * k2;
    m.kappa_sq = m.kx * m.kx + m.ky * m.ky;
    m.kappa = std::sqrt(m.kappa_sq);
    modes_.push_back(m);
  };
  for (int k1 = 1; k1 <= N; ++k1) push(k1, 0);
  for (int k2 = 1; k2 <= N; ++k2)
    for (int k1 = -N; k1 <= N; ++k1) push(k1, k2);

  const int side = 2 * N + 1;
  lookup_.assign(static_cast<std::size_t>(side) * side, -1);
  for (std::size_t i = 0; i < modes_.size(); ++i)
    lookup_[static_cast<std::size_t>(modes_[i].k1 + N) * side + (modes_[i].k2 + N)] =
        static_cast<long>(i);
}

long Basis::find(int k1, int k2, bool& conjugate) const noexcept {
  conjugate = false;
  if (std::max(std::abs(k1), std::abs(k2)) > n_ || (k1 == 0 && k2 == 0)) return -1;
  const int side = 2 * n_ + 1;
  long idx = lookup_[static_cast<std::size_t>(k1 + n_) * side + (k2 + n_)];
  if (idx >= 0) return idx;
  conjugate = true;
  return lookup_[static_cast<std::size_t>(-k1 + n_) * side + (-k2 + n_)];
}

std::vector<double> Basis::stokes_decay(double t) const {
  std::vector<double> out(modes_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) out[i] = std::exp(-nu_ * modes_[i].kappa_sq * t);
  return out;
}

bool Basis::operator==(const Basis& other) const noexcept {
  return n_ == other.n_ && nu_ == other.nu_ && l_ == other.l_ && grid_ == other.grid_;
}

BasisPtr make_basis(int N, double nu, double L, double dealias_factor) {
  return std::make_shared<const Basis>(N, nu, L, dealias_factor);
}

SpectralField::SpectralField(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw InvalidArgument("spectral field: null basis");
  coeffs_.assign(basis_->mode_count(), complex{});
}

SpectralField::SpectralField(BasisPtr basis, std::vector<complex> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw InvalidArgument("spectral field: null basis");
  if (coeffs_.size() != basis_->mode_count())
    throw InvalidArgument("spectral field: coefficient count does not match basis");
}

std::array<complex, 2> SpectralField::velocity_coeff(std::size_t i) const {
  const Mode& m = basis_->modes()[i];
  const complex ic = complex(0.0, 1.0) * coeffs_[i] / m.kappa;
  return {-m.ky * ic, m.kx * ic};
}

complex SpectralField::coefficient(int k1, int k2) const {
  bool conj = false;
  long idx = basis_->find(k1, k2, conj);
  if (idx < 0) return {};
  return conj ? std::conj(coeffs_[idx]) : coeffs_[idx];
}

void SpectralField::set_coefficient(int k1, int k2, complex value) {
  bool conj = false;
  long idx = basis_->find(k1, k2, conj);
  if (idx < 0) throw InvalidArgument("spectral field: mode outside truncation");
  coeffs_[idx] = conj ? std::conj(value) : value;
}

bool SpectralField::is_finite() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

double SpectralField::max_abs_coeff() const noexcept {
  double m = 0.0;
  for (complex c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

void require_same_basis(const SpectralField& a, const SpectralField& b) {
  if (a.empty() || b.empty()) throw BasisMismatch("operation on an empty field");
  if (a.basis_ptr() != b.basis_ptr() && !(a.basis() == b.basis()))
    throw BasisMismatch("fields live on different bases");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (complex& c : coeffs_) c *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * other.coeffs_[i];
  return *this;
}

bool SpectralField::operator==(const SpectralField& other) const {
  if (empty() || other.empty()) return empty() == other.empty();
  return basis() == other.basis() && coeffs_ == other.coeffs_;
}

SpectralField zeros_like(const SpectralField& u) { return SpectralField(u.basis_ptr()); }

double inner_h(const SpectralField& u, const SpectralField& w) {
  require_same_basis(u, w);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] * std::conj(w[i])).real();
  const double L = u.basis().L();
  return 2.0 * L * L * s;
}

double inner_v(const SpectralField& u, const SpectralField& w) {
  require_same_basis(u, w);
  const auto& modes = u.basis().modes();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += modes[i].kappa_sq * (u[i] * std::conj(w[i])).real();
  const double L = u.basis().L();
  return 2.0 * L * L * s;
}

double h_norm(const SpectralField& u) { return std::sqrt(inner_h(u, u)); }
double v_norm(const SpectralField& u) { return std::sqrt(inner_v(u, u)); }

namespace {

struct Workspace {
  cbuf a, b, c;
  void resize(int M) {
    const std::size_t n = static_cast<std::size_t>(M) * M;
    for (cbuf* buf : {&a, &b, &c}) {
      buf->assign(n, complex{});
    }
  }
};

Workspace& workspace(int M) {
  thread_local Workspace ws;
  ws.resize(M);
  return ws;
}

// Writes the grid spectrum of the real pair (p, q) packed as p + i q, given
// the Fourier coefficients of p and q on the stored half-plane modes.
template <class Coeffs>
void scatter(cbuf& grid, const Basis& basis, int M, Coeffs&& coeffs) {
  const auto& modes = basis.modes();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto [p, q] = coeffs(i);
    const int k1 = modes[i].k1, k2 = modes[i].k2;
    grid[static_cast<std::size_t>(wrap(k1, M)) * M + wrap(k2, M)] = p + complex(0, 1) * q;
    grid[static_cast<std::size_t>(wrap(-k1, M)) * M + wrap(-k2, M)] =
        std::conj(p) + complex(0, 1) * std::conj(q);
  }
}

// Splits the normalized spectrum of p + i q back into (p_k, q_k).
std::array<complex, 2> gather(const cbuf& grid, int M, int k1, int k2) {
  const complex z = grid[static_cast<std::size_t>(wrap(k1, M)) * M + wrap(k2, M)];
  const complex zm = std::conj(grid[static_cast<std::size_t>(wrap(-k1, M)) * M + wrap(-k2, M)]);
  return {0.5 * (z + zm), complex(0, -0.5) * (z - zm)};
}

// Leray-projects the packed spectrum (already normalized by 1/M^2) onto the basis.
SpectralField project_packed(const cbuf& grid, int M, const BasisPtr& basis) {
  SpectralField out(basis);
  const auto& modes = basis->modes();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Mode& m = modes[i];
    const auto [w1, w2] = gather(grid, M, m.k1, m.k2);
    out[i] = complex(0, -1) * (w1 * (-m.ky) + w2 * m.kx) / m.kappa;
  }
  return out;
}

void normalize(cbuf& grid, int M) {
  const double s = 1.0 / (static_cast<double>(M) * M);
  for (complex& z : grid) z *= s;
}

}  // namespace

double l4_norm(const SpectralField& u) {
  const int Q = u.basis().quadrature_size();
  PhysicalField phys = to_physical(u, Q);
  double s = 0.0;
  for (std::size_t j = 0; j < phys.ux.size(); ++j) {
    const double e = phys.ux[j] * phys.ux[j] + phys.uy[j] * phys.uy[j];
    s += e * e;
  }
  const double cell = u.basis().L() / Q;
  return std::pow(s * cell * cell, 0.25);
}

Norms norms(const SpectralField& u) { return {h_norm(u), v_norm(u), l4_norm(u)}; }

SpectralField apply_stokes(const SpectralField& u) {
  SpectralField out = u;
  const auto& modes = u.basis().modes();
  const double nu = u.basis().nu();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= nu * modes[i].kappa_sq;
  return out;
}

SpectralField stokes_semigroup(const SpectralField& u, double t) {
  SpectralField out = u;
  const auto decay = u.basis().stokes_decay(t);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= decay[i];
  return out;
}

SpectralField nonlinear_B(const SpectralField& u, const SpectralField& v) {
  require_same_basis(u, v);
  const Basis& basis = u.basis();
  const auto& modes = basis.modes();
  const int M = basis.grid_size();
  Workspace& ws = workspace(M);

  scatter(ws.a, basis, M, [&](std::size_t i) { return u.velocity_coeff(i); });
  scatter(ws.b, basis, M, [&](std::size_t i) {
    const complex v1 = v.velocity_coeff(i)[0];
    return std::array<complex, 2>{complex(0, modes[i].kx) * v1, complex(0, modes[i].ky) * v1};
  });
  scatter(ws.c, basis, M, [&](std::size_t i) {
    const complex v2 = v.velocity_coeff(i)[1];
    return std::array<complex, 2>{complex(0, modes[i].kx) * v2, complex(0, modes[i].ky) * v2};
  });
  detail::fft_backward(ws.a, M);
  detail::fft_backward(ws.b, M);
  detail::fft_backward(ws.c, M);

  for (std::size_t j = 0; j < ws.a.size(); ++j) {
    const double u1 = ws.a[j].real(), u2 = ws.a[j].imag();
    const double w1 = u1 * ws.b[j].real() + u2 * ws.b[j].imag();
    const double w2 = u1 * ws.c[j].real() + u2 * ws.c[j].imag();
    ws.a[j] = complex(w1, w2);
  }
  detail::fft_forward(ws.a, M);
  normalize(ws.a, M);
  return project_packed(ws.a, M, u.basis_ptr());
}

SpectralField nonlinear_B(const SpectralField& u) { return nonlinear_B(u, u); }

SpectralField advection_transpose(const SpectralField& u, const SpectralField& y) {
  require_same_basis(u, y);
  const Basis& basis = u.basis();
  const auto& modes = basis.modes();
  const int M = basis.grid_size();
  Workspace& ws = workspace(M);

  scatter(ws.a, basis, M, [&](std::size_t i) { return y.velocity_coeff(i); });
  scatter(ws.b, basis, M, [&](std::size_t i) {
    const auto uh = u.velocity_coeff(i);
    const complex d(0, modes[i].kx);
    return std::array<complex, 2>{d * uh[0], d * uh[1]};
  });
  scatter(ws.c, basis, M, [&](std::size_t i) {
    const auto uh = u.velocity_coeff(i);
    const complex d(0, modes[i].ky);
    return std::array<complex, 2>{d * uh[0], d * uh[1]};
  });
  detail::fft_backward(ws.a, M);
  detail::fft_backward(ws.b, M);
  detail::fft_backward(ws.c, M);

  for (std::size_t j = 0; j < ws.a.size(); ++j) {
    const double y1 = ws.a[j].real(), y2 = ws.a[j].imag();
    const double o1 = y1 * ws.b[j].real() + y2 * ws.b[j].imag();
    const double o2 = y1 * ws.c[j].real() + y2 * ws.c[j].imag();
    ws.a[j] = complex(o1, o2);
  }
  detail::fft_forward(ws.a, M);
  normalize(ws.a, M);
  return project_packed(ws.a, M, u.basis_ptr());
}

double trilinear_b(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
  require_same_basis(u, w);
  return inner_h(nonlinear_B(u, v), w);
}

PhysicalField to_physical(const SpectralField& u, int M) {
  const Basis& basis = u.basis();
  if (M < 2 * basis.N() + 1) throw GridMismatch("to_physical: grid too small for the truncation");
  cbuf grid(static_cast<std::size_t>(M) * M);
  scatter(grid, basis, M, [&](std::size_t i) { return u.velocity_coeff(i); });
  detail::fft_backward(grid, M);
  PhysicalField out;
  out.M = M;
  out.ux.resize(grid.size());
  out.uy.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out.ux[j] = grid[j].real();
    out.uy[j] = grid[j].imag();
  }
  return out;
}

PhysicalField to_physical(const SpectralField& u) { return to_physical(u, u.basis().grid_size()); }

SpectralField project_leray(const PhysicalField& raw, const BasisPtr& basis) {
  const int M = basis->grid_size();
  const std::size_t n = static_cast<std::size_t>(M) * M;
  if (raw.M != M || raw.ux.size() != n || raw.uy.size() != n)
    throw GridMismatch("project_leray: field is not sampled on the basis grid");
  cbuf grid(n);
  for (std::size_t j = 0; j < n; ++j) grid[j] = complex(raw.ux[j], raw.uy[j]);
  detail::fft_forward(grid, M);
  normalize(grid, M);
  return project_packed(grid, M, basis);
}

}  // namespace nse_mdp::spectral
