#pragma once

// Mark space, Poisson random measures on [0,T] x X, the thinning
// construction of controlled measures, the entropy cost L_T and the noise
// coefficient G together with its Lipschitz/growth certification.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nse_mdp/sampling.hpp"
#include "nse_mdp/spectral.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::noise {

/// Finite marks y_1..y_m with weights, or [0,1] with a bounded density.
class MarkSpace {
 public:
  static MarkSpace finite(std::vector<double> weights);
  /// Marks are drawn by rejection sampling against `density_bound`.
  static MarkSpace continuous(std::function<double(double)> density, double density_bound);

  bool is_finite() const noexcept { return !density_; }
  /// Number of marks (0 for the continuous kind).
  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_.at(i); }
  double total_mass() const noexcept { return total_; }

  double density(double y) const { return density_(y); }
  double density_bound() const noexcept { return bound_; }

 private:
  std::vector<double> weights_;
  std::function<double(double)> density_;
  double bound_ = 0.0;
  double total_ = 0.0;
};

/// Values on marks x time nodes. Stored either as the intensity phi or as
/// the moderate-deviation control psi = (phi - 1) / a.
class ControlField {
 public:
  enum class Kind { Phi, Psi };

  ControlField() = default;
  ControlField(std::size_t n_marks, std::size_t n_nodes, Kind kind, double fill = 0.0, double a_eps = 1.0);

  static ControlField constant_phi(std::size_t n_marks, std::size_t n_nodes, double value);
  static ControlField zero_psi(std::size_t n_marks, std::size_t n_nodes);

  Kind kind() const noexcept { return kind_; }
  double a_eps() const noexcept { return a_eps_; }
  std::size_t n_marks() const noexcept { return marks_; }
  std::size_t n_nodes() const noexcept { return nodes_; }

  double operator()(std::size_t mark, std::size_t node) const { return values_[mark * nodes_ + node]; }
  double& operator()(std::size_t mark, std::size_t node) { return values_[mark * nodes_ + node]; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  /// phi = 1 + a psi (identity if already phi).
  ControlField to_phi(double a_eps) const;
  /// psi = (phi - 1)/a (identity if already psi).
  ControlField to_psi(double a_eps) const;

  double max_value() const;
  double min_value() const;

  ControlField& operator+=(const ControlField& o);
  ControlField& operator*=(double s);
  friend ControlField operator+(ControlField a, const ControlField& b) { return a += b; }
  friend ControlField operator*(double s, ControlField a) { return a *= s; }

 private:
  std::size_t marks_ = 0;
  std::size_t nodes_ = 0;
  Kind kind_ = Kind::Psi;
  double a_eps_ = 1.0;
  std::vector<double> values_;
};

/// Throws GridMismatch unless the control is shaped marks x grid nodes.
void require_shape(const ControlField& c, const MarkSpace& marks, const TimeGrid& grid);

/// <a, b> in L^2(vartheta_T): sum_{i,n} a b vartheta_i w_n (trapezoid w_n).
double l2_inner(const ControlField& a, const ControlField& b, const MarkSpace& marks, const TimeGrid& grid);
double l2_norm(const ControlField& a, const MarkSpace& marks, const TimeGrid& grid);

struct JumpEvent {
  double t = 0.0;
  int mark = -1;   ///< mark index (finite marks) or -1
  double y = 0.0;  ///< mark position for continuous marks, index otherwise
  double r = 0.0;  ///< auxiliary thinning coordinate in [0, r_max]
};

/// Realized atoms of a counting measure on [0,T] x X x [0, r_max].
struct JumpStream {
  double T = 0.0;
  double r_max = 0.0;
  std::vector<JumpEvent> events;

  std::size_t size() const noexcept { return events.size(); }
  /// Per-mark event counts on [0,T].
  std::vector<std::size_t> counts(std::size_t n_marks) const;
};

struct SampleOptions {
  double event_cap = 1e7;
};

/// PRM with intensity theta * vartheta_T. Each atom carries r ~ U[0, theta],
/// i.e. the stream is the restriction of the Lebesgue-extended measure to
/// r <= theta, which is what thinning consumes.
JumpStream sample_prm(double theta, const MarkSpace& marks, const TimeGrid& grid, std::uint64_t seed,
                      const SampleOptions& opts = {});
/// Same, drawing from a caller-provided generator.
JumpStream sample_prm(double theta, const MarkSpace& marks, const TimeGrid& grid, Rng& rng,
                      const SampleOptions& opts = {});

/// Keeps atom (t, y, r) iff r <= scale * phi(y, t) with phi piecewise
/// constant on [t_n, t_{n+1}). Result is distributed as N^{scale * phi}.
JumpStream thin_to_control(const JumpStream& base, const ControlField& phi, const TimeGrid& grid,
                           double scale = 1.0);

/// l(r) = r log r - r + 1 with l(0) = 1.
double entropy_l(double r);

/// L_T(phi) = sum_{i,n} l(phi_{i,n}) vartheta_i w_n.
double cost_LT(const ControlField& phi, const MarkSpace& marks, const TimeGrid& grid);

/// True iff L_T(phi) <= M a(eps)^2.
bool control_class_check(const ControlField& phi, const MarkSpace& marks, const TimeGrid& grid, double M,
                         double a_eps);

/// psi 1{|psi| <= beta / a}.
ControlField psi_truncate(const ControlField& psi, double beta, double a_eps);

/// G(x, y_i) for a finite mark index i.
class Coefficient {
 public:
  virtual ~Coefficient() = default;
  virtual spectral::SpectralField apply(const spectral::SpectralField& x, std::size_t mark) const = 0;
  virtual std::string describe() const = 0;
};

/// G(x, y_i) = h_i (g0_i + c P_{<=m} x). P_{<=m} keeps modes with
/// max(|k1|,|k2|) <= m; m < 0 keeps every mode.
class AffineCoefficient final : public Coefficient {
 public:
  AffineCoefficient(std::vector<double> h, std::vector<spectral::SpectralField> g0, double c, int m);

  spectral::SpectralField apply(const spectral::SpectralField& x, std::size_t mark) const override;
  std::string describe() const override;

  /// Analytic bounds: L_G = |c h|, M_G = |h| max(|g0|_H, |c|).
  std::vector<double> lipschitz_bounds() const;
  std::vector<double> growth_bounds() const;

  const std::vector<double>& h() const noexcept { return h_; }
  double c() const noexcept { return c_; }

 private:
  std::vector<double> h_;
  std::vector<spectral::SpectralField> g0_;
  double c_;
  int m_;
};

struct NoiseModel {
  MarkSpace marks = MarkSpace::finite({});
  std::shared_ptr<const Coefficient> G;  ///< null means G == 0
  std::vector<double> L_G;
  std::vector<double> M_G;
  ForceSpec f;

  bool zero_noise() const noexcept { return !G; }
  /// G(x, y_i), or a zero field when the coefficient is absent.
  spectral::SpectralField coefficient(const spectral::SpectralField& x, std::size_t mark) const;
};

/// Affine noise model with analytic L_G, M_G.
NoiseModel make_affine_noise(std::vector<double> weights, std::vector<double> h,
                             std::vector<spectral::SpectralField> g0, double c, int m, ForceSpec f);

struct ConditionViolation {
  std::string kind;  ///< "lipschitz" or "growth"
  std::size_t mark = 0;
  double ratio = 0.0;
  spectral::SpectralField x1;
  spectral::SpectralField x2;
};

struct ConditionReport {
  bool passed = true;
  std::size_t samples = 0;
  double max_lipschitz_ratio = 0.0;
  double max_growth_ratio = 0.0;
  double lipschitz_l2 = 0.0;  ///< sum_i L_G(y_i)^2 vartheta_i
  double growth_l2 = 0.0;     ///< sum_i M_G(y_i)^2 vartheta_i
  bool condition_b_automatic = false;
  std::string note;
  std::vector<ConditionViolation> violations;
};

/// Samples random state pairs and checks |G(x1)-G(x2)| <= L_G |x1-x2| and
/// |G(x)| <= M_G (1+|x|) against the model's declared bounds.
ConditionReport verify_condition_A(const NoiseModel& noise, const spectral::BasisPtr& basis,
                                   std::size_t n_samples, std::uint64_t seed);

}  // namespace nse_mdp::noise
