#include "nse_mdp/rate.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "nse_mdp/parallel.hpp"
#include "nse_mdp/sampling.hpp"

namespace nse_mdp::rate {

SkeletonOperator::SkeletonOperator(Trajectory u0_traj, noise::NoiseModel noise, const TimeGrid& grid,
                                   bool include_advection)
    : basis_(u0_traj.basis_ptr()),
      noise_(std::move(noise)),
      grid_(grid),
      stepper_(std::move(u0_traj), grid, include_advection),
      coeffs_(dynamics::SkeletonCoefficients::build(stepper_.base(), noise_)),
      weights_(grid.quadrature_weights()) {
  if (!noise_.marks.is_finite()) throw InvalidArgument("SkeletonOperator: requires finite marks");
  if (noise_.marks.size() == 0) throw InvalidArgument("SkeletonOperator: no marks");
}

Trajectory SkeletonOperator::apply_forward_path(const noise::ControlField& psi) const {
  noise::require_shape(psi, noise_.marks, grid_);
  if (psi.kind() != noise::ControlField::Kind::Psi) throw InvalidArgument("apply_forward: expects a psi control");
  Trajectory out{0.0, grid_.dt(), {}};
  out.fields.reserve(grid_.n_nodes());
  out.fields.emplace_back(basis_);
  SpectralField F_prev = dynamics::skeleton_forcing(psi, coeffs_, noise_.marks, 0);
  for (std::size_t n = 0; n < static_cast<std::size_t>(grid_.n_steps()); ++n) {
    SpectralField F_next = dynamics::skeleton_forcing(psi, coeffs_, noise_.marks, n + 1);
    out.fields.push_back(stepper_.step(out.fields.back(), F_prev, F_next, n));
    F_prev = std::move(F_next);
  }
  return out;
}

SpectralField SkeletonOperator::apply_forward(const noise::ControlField& psi) const {
  return apply_forward_path(psi).fields.back();
}

noise::ControlField SkeletonOperator::apply_adjoint(const SpectralField& v) const {
  if (!(v.basis() == *basis_)) throw BasisMismatch("apply_adjoint: field on a different basis");
  const std::size_t n_nodes = grid_.n_nodes();
  std::vector<SpectralField> bar_F(n_nodes, SpectralField(basis_));
  SpectralField lambda = v;
  for (std::size_t n = static_cast<std::size_t>(grid_.n_steps()); n-- > 0;) {
    auto st = stepper_.adjoint_step(lambda, n);
    bar_F[n] += st.bar_F_n;
    bar_F[n + 1] += st.bar_F_n1;
    lambda = std::move(st.lambda);
  }
  // F_n = sum_i psi_{i,n} vartheta_i G_{n,i}; dividing by vartheta_i w_n turns
  // the Euclidean gradient into the L^2(vartheta_T) Riesz representer.
  noise::ControlField out = noise::ControlField::zero_psi(noise_.marks.size(), n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n)
    for (std::size_t i = 0; i < noise_.marks.size(); ++i)
      out(i, n) = spectral::inner_h(coeffs_.G[n][i], bar_F[n]) / weights_[n];
  return out;
}

SpectralField SkeletonOperator::apply_normal(const SpectralField& v) const { return apply_forward(apply_adjoint(v)); }

double SkeletonOperator::control_inner(const noise::ControlField& a, const noise::ControlField& b) const {
  return noise::l2_inner(a, b, noise_.marks, grid_);
}

double SkeletonOperator::control_norm(const noise::ControlField& a) const {
  return noise::l2_norm(a, noise_.marks, grid_);
}

namespace {

SpectralField regularized_normal(const SkeletonOperator& op, const SpectralField& v, double mu) {
  SpectralField out = op.apply_normal(v);
  if (mu != 0.0) out.axpy(mu, v);
  return out;
}

RateResult finish(const SkeletonOperator& op, const SpectralField& target, SpectralField w, int iterations,
                  double mu) {
  RateResult res;
  res.psi_star = op.apply_adjoint(w);
  res.w = std::move(w);
  const double norm = op.control_norm(res.psi_star);
  res.I = 0.5 * norm * norm;
  SpectralField r = op.apply_forward(res.psi_star);
  r -= target;
  res.residual = spectral::h_norm(r);
  res.rel_residual = res.residual / spectral::h_norm(target);
  res.iterations = iterations;
  res.regularized = mu > 0.0;
  return res;
}

}  // namespace

RateResult rate_terminal(const SkeletonOperator& op, const SpectralField& target, const RateOptions& opts) {
  if (!(target.basis() == *op.basis())) throw BasisMismatch("rate_terminal: target on a different basis");
  if (opts.tikhonov < 0.0) throw InvalidArgument("rate_terminal: negative Tikhonov weight");
  const double z_norm = spectral::h_norm(target);
  if (z_norm == 0.0) {
    RateResult res;
    res.psi_star = noise::ControlField::zero_psi(op.noise().marks.size(), op.grid().n_nodes());
    res.w = SpectralField(op.basis());
    return res;
  }
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(8 * op.basis()->mode_count());
  const double mu = opts.tikhonov;

  SpectralField x(op.basis());
  SpectralField best_x = x;
  double best_rel = 1.0;
  int it = 0;
  // CG with a true-residual restart whenever the recurrence claims convergence.
  while (it < max_iter) {
    SpectralField r = target;
    if (it > 0) r -= regularized_normal(op, x, mu);
    double rr = spectral::inner_h(r, r);
    double rel = std::sqrt(rr) / z_norm;
    if (rel < best_rel) {
      best_rel = rel;
      best_x = x;
    }
    if (rel <= opts.tol) return finish(op, target, x, it, mu);
    SpectralField p = r;
    bool claimed = false;
    while (it < max_iter) {
      ++it;
      SpectralField Ap = regularized_normal(op, p, mu);
      const double pAp = spectral::inner_h(p, Ap);
      if (!(pAp > 0.0)) break;  // singular direction: target not reachable
      const double alpha = rr / pAp;
      x.axpy(alpha, p);
      r.axpy(-alpha, Ap);
      const double rr_new = spectral::inner_h(r, r);
      const double rel_new = std::sqrt(rr_new) / z_norm;
      if (rel_new < best_rel) {
        best_rel = rel_new;
        best_x = x;
      }
      if (rel_new <= opts.tol) {
        claimed = true;
        break;
      }
      p *= rr_new / rr;
      p += r;
      rr = rr_new;
    }
    if (!claimed) break;
  }
  SpectralField check = target - regularized_normal(op, x, mu);
  if (spectral::h_norm(check) / z_norm <= opts.tol) return finish(op, target, x, it, mu);
  RateResult best = finish(op, target, best_x, it, mu);
  throw ConvergenceFailure(fmt::format("rate_terminal: no convergence after {} iterations (relative residual {:.3e})",
                                       it, best.rel_residual),
                           std::move(best));
}

double normal_objective(const SkeletonOperator& op, const SpectralField& w, const SpectralField& target, double mu) {
  return 0.5 * spectral::inner_h(w, regularized_normal(op, w, mu)) - spectral::inner_h(target, w);
}

SpectralField normal_gradient(const SkeletonOperator& op, const SpectralField& w, const SpectralField& target,
                              double mu) {
  SpectralField g = regularized_normal(op, w, mu);
  g -= target;
  return g;
}

DominantMode dominant_direction(const SkeletonOperator& op, std::uint64_t seed, int max_iter, double tol) {
  Rng rng = make_rng(seed, 0x646f6d);
  DominantMode out;
  out.direction = random_field(op.basis(), rng);
  double previous = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    SpectralField next = op.apply_normal(out.direction);
    const double lam = spectral::inner_h(out.direction, next);
    const double norm = spectral::h_norm(next);
    out.iterations = k;
    if (norm == 0.0) {
      out.eigenvalue = 0.0;
      return out;
    }
    next *= 1.0 / norm;
    out.direction = std::move(next);
    out.eigenvalue = lam;
    if (k > 1 && std::abs(lam - previous) <= tol * std::abs(lam)) break;
    previous = lam;
  }
  return out;
}

LevelSetResult rate_level_set(const SkeletonOperator& op, double r, const LevelSetOptions& opts) {
  if (!(r >= 0.0)) throw InvalidArgument("rate_level_set: radius must be nonnegative");
  const auto& basis = op.basis();
  std::vector<SpectralField> dirs;
  for (std::size_t i = 0; i < basis->mode_count(); ++i) {
    for (const spectral::complex unit : {spectral::complex(1.0, 0.0), spectral::complex(0.0, 1.0)}) {
      SpectralField d(basis);
      d[i] = unit;
      d *= 1.0 / spectral::h_norm(d);
      dirs.push_back(std::move(d));
    }
  }
  Rng rng = make_rng(opts.seed, 0x6c7673);
  for (int k = 0; k < opts.n_random; ++k) dirs.push_back(random_field(basis, rng));
  if (opts.use_dominant) {
    auto dom = dominant_direction(op, opts.seed);
    if (dom.eigenvalue > 0.0) dirs.push_back(std::move(dom.direction));
  }

  std::vector<double> values(dirs.size(), std::numeric_limits<double>::infinity());
  parallel_for(dirs.size(), [&](std::size_t k) {
    try {
      values[k] = rate_terminal(op, dirs[k], opts.rate).I;
    } catch (const ConvergenceFailure&) {
      // direction outside the range of Lambda
    }
  });

  LevelSetResult out;
  out.directions_tried = dirs.size();
  std::size_t best = dirs.size();
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    if (!std::isfinite(values[k])) {
      ++out.directions_failed;
      continue;
    }
    if (best == dirs.size() || values[k] < values[best]) best = k;
  }
  if (best == dirs.size()) throw Error("rate_level_set: no direction is reachable by the skeleton map");
  out.I_min = r * r * values[best];
  out.direction = dirs[best];
  out.target = r * dirs[best];
  return out;
}

}  // namespace nse_mdp::rate
