#include "nse_mdp/noise.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <random>

#include "nse_mdp/errors.hpp"

namespace nse_mdp::noise {

using spectral::SpectralField;

MarkSpace MarkSpace::finite(std::vector<double> weights) {
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("mark space: weights must be positive");
  MarkSpace m;
  m.total_ = std::accumulate(weights.begin(), weights.end(), 0.0);
  m.weights_ = std::move(weights);
  return m;
}

MarkSpace MarkSpace::continuous(std::function<double(double)> density, double density_bound) {
  if (!density) throw InvalidArgument("mark space: missing density");
  if (!(density_bound > 0.0)) throw InvalidArgument("mark space: density bound must be positive");
  MarkSpace m;
  m.density_ = std::move(density);
  m.bound_ = density_bound;
  m.total_ = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(m.density_, 0.0, 1.0, 10, 1e-12);
  for (int j = 0; j <= 1000; ++j) {
    const double v = m.density_(j / 1000.0);
    if (v < 0.0 || v > density_bound)
      throw InvalidArgument("mark space: density must lie in [0, bound]");
  }
  return m;
}

ControlField::ControlField(std::size_t n_marks, std::size_t n_nodes, Kind kind, double fill, double a_eps)
    : marks_(n_marks), nodes_(n_nodes), kind_(kind), a_eps_(a_eps), values_(n_marks * n_nodes, fill) {}

ControlField ControlField::constant_phi(std::size_t n_marks, std::size_t n_nodes, double value) {
  return ControlField(n_marks, n_nodes, Kind::Phi, value);
}

ControlField ControlField::zero_psi(std::size_t n_marks, std::size_t n_nodes) {
  return ControlField(n_marks, n_nodes, Kind::Psi, 0.0);
}

ControlField ControlField::to_phi(double a_eps) const {
  if (kind_ == Kind::Phi) return *this;
  ControlField out(marks_, nodes_, Kind::Phi, 0.0, a_eps);
  for (std::size_t j = 0; j < values_.size(); ++j) out.values_[j] = 1.0 + a_eps * values_[j];
  return out;
}

ControlField ControlField::to_psi(double a_eps) const {
  if (kind_ == Kind::Psi) return *this;
  ControlField out(marks_, nodes_, Kind::Psi, 0.0, a_eps);
  for (std::size_t j = 0; j < values_.size(); ++j) out.values_[j] = (values_[j] - 1.0) / a_eps;
  return out;
}

double ControlField::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double ControlField::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

ControlField& ControlField::operator+=(const ControlField& o) {
  if (o.marks_ != marks_ || o.nodes_ != nodes_) throw GridMismatch("control fields differ in shape");
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
  return *this;
}

ControlField& ControlField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

void require_shape(const ControlField& c, const MarkSpace& marks, const TimeGrid& grid) {
  if (c.n_marks() != marks.size() || c.n_nodes() != grid.n_nodes())
    throw GridMismatch(fmt::format("control is {}x{}, expected {}x{} (marks x nodes)", c.n_marks(),
                                   c.n_nodes(), marks.size(), grid.n_nodes()));
}

double l2_inner(const ControlField& a, const ControlField& b, const MarkSpace& marks, const TimeGrid& grid) {
  require_shape(a, marks, grid);
  require_shape(b, marks, grid);
  const auto w = grid.quadrature_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < a.n_marks(); ++i) {
    double row = 0.0;
    for (std::size_t n = 0; n < a.n_nodes(); ++n) row += a(i, n) * b(i, n) * w[n];
    s += marks.weight(i) * row;
  }
  return s;
}

double l2_norm(const ControlField& a, const MarkSpace& marks, const TimeGrid& grid) {
  return std::sqrt(l2_inner(a, a, marks, grid));
}

std::vector<std::size_t> JumpStream::counts(std::size_t n_marks) const {
  std::vector<std::size_t> c(n_marks, 0);
  for (const auto& e : events)
    if (e.mark >= 0 && static_cast<std::size_t>(e.mark) < n_marks) ++c[e.mark];
  return c;
}

JumpStream sample_prm(double theta, const MarkSpace& marks, const TimeGrid& grid, std::uint64_t seed,
                      const SampleOptions& opts) {
  Rng rng = make_rng(seed);
  return sample_prm(theta, marks, grid, rng, opts);
}

JumpStream sample_prm(double theta, const MarkSpace& marks, const TimeGrid& grid, Rng& rng,
                      const SampleOptions& opts) {
  if (!(theta > 0.0)) throw InvalidArgument("sample_prm: theta must be positive");
  const double T = grid.T();
  const double expected = theta * T * marks.total_mass();
  if (expected > opts.event_cap)
    throw BudgetExceeded(fmt::format("sample_prm: expected {:.3g} events exceeds the cap {:.3g}", expected,
                                     opts.event_cap));
  JumpStream out;
  out.T = T;
  out.r_max = theta;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (marks.is_finite()) {
    for (std::size_t i = 0; i < marks.size(); ++i) {
      std::poisson_distribution<long> count(theta * T * marks.weight(i));
      const long k = count(rng);
      for (long j = 0; j < k; ++j) {
        JumpEvent e;
        e.t = T * unif(rng);
        e.mark = static_cast<int>(i);
        e.y = static_cast<double>(i);
        e.r = theta * unif(rng);
        out.events.push_back(e);
      }
    }
  } else if (expected > 0.0) {
    std::poisson_distribution<long> count(expected);
    const long k = count(rng);
    for (long j = 0; j < k; ++j) {
      JumpEvent e;
      e.t = T * unif(rng);
      double y = 0.0;
      do {
        y = unif(rng);
      } while (marks.density_bound() * unif(rng) > marks.density(y));
      e.y = y;
      e.r = theta * unif(rng);
      out.events.push_back(e);
    }
  }
  std::sort(out.events.begin(), out.events.end(),
            [](const JumpEvent& a, const JumpEvent& b) { return a.t < b.t || (a.t == b.t && a.mark < b.mark); });
  return out;
}

JumpStream thin_to_control(const JumpStream& base, const ControlField& phi, const TimeGrid& grid, double scale) {
  if (phi.kind() != ControlField::Kind::Phi) throw InvalidArgument("thin_to_control: expects an intensity phi");
  if (phi.n_nodes() != grid.n_nodes()) throw GridMismatch("thin_to_control: control not on the time grid");
  if (phi.min_value() < 0.0) throw InvalidArgument("thin_to_control: phi must be nonnegative");
  if (base.r_max < scale * phi.max_value())
    throw InvalidArgument(fmt::format("thin_to_control: r_max {} below max intensity {}", base.r_max,
                                      scale * phi.max_value()));
  JumpStream out;
  out.T = base.T;
  out.r_max = base.r_max;
  for (const auto& e : base.events) {
    if (e.mark < 0 || static_cast<std::size_t>(e.mark) >= phi.n_marks())
      throw GridMismatch("thin_to_control: event mark outside the control's mark set");
    if (e.r <= scale * phi(e.mark, grid.step_of(e.t))) out.events.push_back(e);
  }
  return out;
}

double entropy_l(double r) {
  if (r < 0.0) throw InvalidArgument("entropy_l: negative argument");
  if (r == 0.0) return 1.0;
  const double x = r - 1.0;
  if (std::abs(x) < 0.25) {
    // sum_{k>=2} (-1)^k x^k / (k (k-1)); avoids the cancellation near r = 1
    double s = 0.0, p = -x;
    for (int k = 2; k < 60; ++k) {
      p *= -x;
      const double term = p / (k * (k - 1.0));
      s += term;
      if (std::abs(term) <= 1e-17 * std::abs(s)) break;
    }
    return s;
  }
  return r * std::log(r) - x;
}

double cost_LT(const ControlField& phi, const MarkSpace& marks, const TimeGrid& grid) {
  require_shape(phi, marks, grid);
  if (phi.kind() != ControlField::Kind::Phi) throw InvalidArgument("cost_LT: expects an intensity phi");
  const auto w = grid.quadrature_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < phi.n_marks(); ++i) {
    double row = 0.0;
    for (std::size_t n = 0; n < phi.n_nodes(); ++n) {
      if (phi(i, n) < 0.0) throw InvalidArgument("cost_LT: negative intensity");
      row += entropy_l(phi(i, n)) * w[n];
    }
    s += marks.weight(i) * row;
  }
  return s;
}

bool control_class_check(const ControlField& phi, const MarkSpace& marks, const TimeGrid& grid, double M,
                         double a_eps) {
  return cost_LT(phi, marks, grid) <= M * a_eps * a_eps;
}

ControlField psi_truncate(const ControlField& psi, double beta, double a_eps) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("psi_truncate: beta must lie in (0,1]");
  if (psi.kind() != ControlField::Kind::Psi) throw InvalidArgument("psi_truncate: expects a psi control");
  ControlField out = psi;
  const double bound = beta / a_eps;
  for (double& v : out.values())
    if (!(std::abs(v) <= bound)) v = 0.0;
  return out;
}

AffineCoefficient::AffineCoefficient(std::vector<double> h, std::vector<SpectralField> g0, double c, int m)
    : h_(std::move(h)), g0_(std::move(g0)), c_(c), m_(m) {
  if (h_.size() != g0_.size()) throw InvalidArgument("affine coefficient: h and g0 differ in length");
  for (std::size_t i = 1; i < g0_.size(); ++i) spectral::require_same_basis(g0_[0], g0_[i]);
}

SpectralField AffineCoefficient::apply(const SpectralField& x, std::size_t mark) const {
  const SpectralField& g = g0_.at(mark);
  SpectralField out = g;
  if (c_ != 0.0) {
    spectral::require_same_basis(g, x);
    const auto& modes = x.basis().modes();
    for (std::size_t j = 0; j < out.size(); ++j)
      if (m_ < 0 || std::max(std::abs(modes[j].k1), std::abs(modes[j].k2)) <= m_) out[j] += c_ * x[j];
  }
  out *= h_[mark];
  return out;
}

std::string AffineCoefficient::describe() const {
  return fmt::format("affine: G(x,y_i) = h_i (g0_i + {} P_<={} x), {} marks", c_, m_, h_.size());
}

std::vector<double> AffineCoefficient::lipschitz_bounds() const {
  std::vector<double> out(h_.size());
  for (std::size_t i = 0; i < h_.size(); ++i) out[i] = std::abs(c_ * h_[i]);
  return out;
}

std::vector<double> AffineCoefficient::growth_bounds() const {
  std::vector<double> out(h_.size());
  for (std::size_t i = 0; i < h_.size(); ++i)
    out[i] = std::abs(h_[i]) * std::max(spectral::h_norm(g0_[i]), std::abs(c_));
  return out;
}

SpectralField NoiseModel::coefficient(const SpectralField& x, std::size_t mark) const {
  if (!G) return spectral::zeros_like(x);
  return G->apply(x, mark);
}

NoiseModel make_affine_noise(std::vector<double> weights, std::vector<double> h, std::vector<SpectralField> g0,
                             double c, int m, ForceSpec f) {
  if (weights.size() != h.size()) throw InvalidArgument("affine noise: weights and h differ in length");
  auto G = std::make_shared<AffineCoefficient>(std::move(h), std::move(g0), c, m);
  NoiseModel model;
  model.marks = MarkSpace::finite(std::move(weights));
  model.L_G = G->lipschitz_bounds();
  model.M_G = G->growth_bounds();
  model.G = std::move(G);
  model.f = std::move(f);
  return model;
}

ConditionReport verify_condition_A(const NoiseModel& noise, const spectral::BasisPtr& basis,
                                   std::size_t n_samples, std::uint64_t seed) {
  const std::size_t m = noise.marks.size();
  if (noise.L_G.size() != m || noise.M_G.size() != m)
    throw InvalidArgument("verify_condition_A: declared bounds do not match the marks");
  ConditionReport rep;
  rep.samples = n_samples;
  for (std::size_t i = 0; i < m; ++i) {
    rep.lipschitz_l2 += noise.L_G[i] * noise.L_G[i] * noise.marks.weight(i);
    rep.growth_l2 += noise.M_G[i] * noise.M_G[i] * noise.marks.weight(i);
  }
  if (noise.marks.is_finite()) {
    rep.condition_b_automatic = true;
    rep.note = "finite mark space: L_G and M_G are bounded, so Condition B holds automatically";
  } else {
    rep.note = "continuous mark space: Condition B is not certified";
  }

  constexpr double slack = 1e-9;
  Rng rng = make_rng(seed, 0xA);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const SpectralField x1 = random_field_varied(basis, rng);
    const double scale = 1.0 + spectral::h_norm(x1);
    const SpectralField x2 = (s % 3 == 0) ? x1 + random_field_varied(basis, rng, 1e-3 * scale, scale)
                                          : random_field_varied(basis, rng);
    for (std::size_t i = 0; i < m; ++i) {
      const SpectralField g1 = noise.coefficient(x1, i);
      const SpectralField g2 = noise.coefficient(x2, i);
      const double lhs_l = spectral::h_norm(g1 - g2);
      const double rhs_l = noise.L_G[i] * spectral::h_norm(x1 - x2);
      const double scale_l = std::max(spectral::h_norm(g1), spectral::h_norm(g2));
      double ratio_l = 0.0;
      if (rhs_l > 0.0) ratio_l = lhs_l / rhs_l;
      else if (lhs_l > slack * std::max(scale_l, 1.0)) ratio_l = INFINITY;
      rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, ratio_l);
      if (ratio_l > 1.0 + slack) {
        rep.passed = false;
        if (rep.violations.size() < 16) rep.violations.push_back({"lipschitz", i, ratio_l, x1, x2});
      }

      const double lhs_g = spectral::h_norm(g1);
      const double rhs_g = noise.M_G[i] * (1.0 + spectral::h_norm(x1));
      double ratio_g = 0.0;
      if (rhs_g > 0.0) ratio_g = lhs_g / rhs_g;
      else if (lhs_g > 0.0) ratio_g = INFINITY;
      rep.max_growth_ratio = std::max(rep.max_growth_ratio, ratio_g);
      if (ratio_g > 1.0 + slack) {
        rep.passed = false;
        if (rep.violations.size() < 16) rep.violations.push_back({"growth", i, ratio_g, x1, x1});
      }
    }
  }
  return rep;
}

}  // namespace nse_mdp::noise
