// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [results-dir]
//
// Experiment records are written under results-dir (default: acceptance_results).

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "nse_mdp/config.hpp"
#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/experiment.hpp"
#include "nse_mdp/noise.hpp"
#include "nse_mdp/parallel.hpp"
#include "nse_mdp/rate.hpp"
#include "nse_mdp/sampling.hpp"

using namespace nse_mdp;
using spectral::SpectralField;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_out;

config::ExperimentConfig load(const char* name) { return config::load_config(fs::path(NSE_MDP_CONFIG_DIR) / name); }

const experiment::CsvRow& row_of(const experiment::ExperimentRecord& rec, const std::string& metric, double eps = 0.0) {
  for (const auto& r : rec.rows)
    if (r.metric == metric && r.eps == eps) return r;
  throw std::runtime_error(fmt::format("{}: no row {} at eps={}", rec.name, metric, eps));
}

std::vector<const experiment::CsvRow*> sweep(const experiment::ExperimentRecord& rec, const std::string& metric) {
  std::vector<const experiment::CsvRow*> out;
  for (const auto& r : rec.rows)
    if (r.metric == metric && r.eps > 0.0) out.push_back(&r);
  return out;
}

bool no_run_errors(const experiment::ExperimentRecord& rec) {
  for (const auto& r : rec.rows)
    if (r.metric == "run_error") return false;
  return true;
}

std::string series(const std::vector<const experiment::CsvRow*>& rows) {
  std::string s;
  for (const auto* r : rows) s += fmt::format("{}{:.4g}", s.empty() ? "" : " > ", r->estimate);
  return s;
}

experiment::ExperimentRecord persist(experiment::ExperimentRecord rec, const config::ExperimentConfig& cfg) {
  experiment::write_record(rec, cfg, g_out);
  return rec;
}

// ---------------------------------------------------------------------------

Verdict trilinear_identities() {
  const auto cfg = load("estimates.cfg");
  const auto basis = config::build_basis(cfg);
  const std::size_t n = 10000;
  std::vector<double> anti(n), skew(n);
  parallel_for(n, [&](std::size_t s) {
    Rng rng = make_rng(0xacce5501, s);
    const auto u = random_field_varied(basis, rng);
    const auto v = random_field_varied(basis, rng);
    const auto w = random_field_varied(basis, rng);
    const double su = spectral::v_norm(u), sv = spectral::v_norm(v), sw = spectral::v_norm(w);
    anti[s] = std::abs(spectral::trilinear_b(u, v, w) + spectral::trilinear_b(u, w, v)) / (su * sv * sw);
    skew[s] = std::abs(spectral::trilinear_b(u, v, v)) / (su * sv * sv);
  });
  const double wa = *std::max_element(anti.begin(), anti.end());
  const double ws = *std::max_element(skew.begin(), skew.end());
  return {basis->N() == 8 && wa <= 1e-10 && ws <= 1e-10,
          fmt::format("N={} triples={} max|b(u,v,w)+b(u,w,v)|/scale={:.2e} max|b(u,v,v)|/scale={:.2e} tol=1e-10",
                      basis->N(), n, wa, ws)};
}

Verdict inequality_suite() {
  const auto cfg = load("estimates.cfg");
  const auto rec = persist(experiment::run_estimates_suite(cfg), cfg);
  bool ok = true;
  std::string d;
  for (const char* m : {"ineq_b_bound", "ineq_b_uuv_bound", "ineq_l4_ladyzhenskaya"}) {
    const auto& r = row_of(rec, m);
    ok = ok && r.estimate <= 1.0;
    d += fmt::format("{}={:.4g} ", m, r.estimate);
  }
  return {ok, d + "(max ratio to bound, must be <= 1)"};
}

Verdict stokes_identity() {
  const auto cfg = load("estimates.cfg");
  const auto basis = config::build_basis(cfg);
  const std::size_t n = 1000;
  std::vector<double> rel(n);
  parallel_for(n, [&](std::size_t s) {
    Rng rng = make_rng(0xacce5502, s);
    const auto u = random_field_varied(basis, rng);
    const double rhs = basis->nu() * spectral::inner_v(u, u);
    rel[s] = std::abs(spectral::inner_h(spectral::apply_stokes(u), u) - rhs) / std::abs(rhs);
  });
  const double worst = *std::max_element(rel.begin(), rel.end());
  return {worst <= 1e-12, fmt::format("fields={} max relative error={:.2e} tol=1e-12", n, worst)};
}

Verdict energy_order() {
  const auto cfg = load("estimates.cfg");
  const auto basis = config::build_basis(cfg);
  const auto u0 = config::build_u0(cfg, basis);
  const auto f = config::build_force(cfg, basis);
  std::vector<double> res;
  for (int level = 0; level < 3; ++level) {
    const auto grid = config::build_grid(cfg, cfg.n_steps << level);
    res.push_back(std::abs(dynamics::energy_balance_residual(dynamics::solve_nse(u0, f, grid), f)));
  }
  // dt halves between levels: successive orders and their least-squares fit
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  const double fit = std::log2(res[0] / res[2]) / 2.0;
  return {fit >= 1.7 && fit <= 2.3 && res[2] < res[1] && res[1] < res[0],
          fmt::format("steps={},{},{} residuals {:.3e} {:.3e} {:.3e} orders {:.3f} {:.3f} fit {:.3f} in [1.7, 2.3]",
                      cfg.n_steps, cfg.n_steps * 2, cfg.n_steps * 4, res[0], res[1], res[2], o1, o2, fit)};
}

// Pearson statistic for counts against Poisson(mean), pooling tail bins so every
// expected count is at least 5; returns {statistic, degrees of freedom}.
std::pair<double, int> poisson_chi2(const std::vector<std::size_t>& counts, double mean) {
  std::map<std::size_t, double> observed;
  for (auto c : counts) observed[c] += 1.0;
  const double n = static_cast<double>(counts.size());
  std::vector<double> obs, expct;
  double p = std::exp(-mean), cum = 0.0, o = 0.0, e = 0.0;
  std::size_t k = 0;
  for (;; ++k) {
    o += observed[k];
    e += n * p;
    cum += p;
    if (e >= 5.0) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
    if (n * (1.0 - cum) < 5.0) break;
    p *= mean / (k + 1.0);
  }
  // the open bin, every count above k and the remaining tail mass join the last bin
  double above = 0.0;
  for (const auto& [kk, c] : observed)
    if (kk > k) above += c;
  obs.back() += o + above;
  expct.back() += e + n * std::max(0.0, 1.0 - cum);
  double stat = 0.0;
  for (std::size_t b = 0; b < obs.size(); ++b) stat += (obs[b] - expct[b]) * (obs[b] - expct[b]) / expct[b];
  return {stat, static_cast<int>(obs.size()) - 1};
}

// Two-sample homogeneity statistic on count histograms, pooled to >= 5 per cell.
std::pair<double, int> homogeneity_chi2(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<std::size_t, std::pair<double, double>> h;
  for (auto c : a) h[c].first += 1.0;
  for (auto c : b) h[c].second += 1.0;
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> acc{0.0, 0.0};
  for (const auto& [k, c] : h) {
    acc.first += c.first;
    acc.second += c.second;
    if (acc.first + acc.second >= 20.0) {
      cells.push_back(acc);
      acc = {0.0, 0.0};
    }
  }
  if (cells.empty()) return {0.0, 0};
  cells.back().first += acc.first;
  cells.back().second += acc.second;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double stat = 0.0;
  for (const auto& [x, y] : cells) {
    const double t = x + y;
    const double ea = t * na / (na + nb), eb = t * nb / (na + nb);
    stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
  }
  return {stat, static_cast<int>(cells.size()) - 1};
}

Verdict poisson_engine() {
  const auto marks = noise::MarkSpace::finite({1.0, 0.5, 2.0});
  const TimeGrid grid(1.0, 16);
  const double theta = 5.0, phi_c = 0.6;
  const std::size_t R = 100000, I = marks.size();
  std::vector<std::vector<std::size_t>> direct(I, std::vector<std::size_t>(R)), thinned = direct, scaled = direct;
  const auto phi = noise::ControlField::constant_phi(I, grid.n_nodes(), phi_c);
  parallel_for(R, [&](std::size_t r) {
    const auto base = noise::sample_prm(theta, marks, grid, derive_seed(0xacce5503, 0, r));
    const auto c0 = base.counts(I);
    const auto c1 = noise::thin_to_control(base, phi, grid, theta).counts(I);
    const auto c2 = noise::sample_prm(theta * phi_c, marks, grid, derive_seed(0xacce5503, 1, r)).counts(I);
    for (std::size_t i = 0; i < I; ++i) {
      direct[i][r] = c0[i];
      thinned[i][r] = c1[i];
      scaled[i][r] = c2[i];
    }
  });
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < I; ++i) {
    const auto [s, df] = poisson_chi2(direct[i], theta * grid.T() * marks.weight(i));
    const double crit = boost::math::quantile(boost::math::chi_squared(df), 0.99);
    const auto [s2, df2] = homogeneity_chi2(thinned[i], scaled[i]);
    const double crit2 = boost::math::quantile(boost::math::chi_squared(df2), 0.99);
    ok = ok && s <= crit && s2 <= crit2;
    d += fmt::format("mark{} gof {:.1f}/{:.1f} thin {:.1f}/{:.1f}; ", i, s, crit, s2, crit2);
  }
  return {ok, fmt::format("replicas={} level=0.01 {}", R, d)};
}

Verdict cost_functional() {
  const auto cfg = load("default.cfg");
  const auto grid = config::build_grid(cfg);
  const auto basis = config::build_basis(cfg);
  const auto marks = config::build_noise(cfg, basis).marks;
  const double one = noise::cost_LT(noise::ControlField::constant_phi(marks.size(), grid.n_nodes(), 1.0), marks, grid);
  Rng rng = make_rng(0xacce5504);
  std::normal_distribution<double> nd;
  auto psi = noise::ControlField::zero_psi(marks.size(), grid.n_nodes());
  for (auto& v : psi.values()) v = nd(rng);
  const double a = 1e-3;
  const double lhs = noise::cost_LT(psi.to_phi(a), marks, grid) / (a * a);
  const double half = 0.5 * std::pow(noise::l2_norm(psi, marks, grid), 2);
  const double rel = std::abs(lhs - half) / half;
  return {one == 0.0 && rel <= 1e-3,
          fmt::format("L_T(1)={} L_T(1+a psi)/a^2={:.8g} half norm^2={:.8g} rel={:.2e} tol=1e-3 (a=1e-3)", one, lhs,
                      half, rel)};
}

Verdict adjoint_exactness() {
  const auto cfg = load("default.cfg");
  const auto basis = config::build_basis(cfg);
  const auto grid = config::build_grid(cfg);
  const auto model = config::build_noise(cfg, basis);
  const auto limit = dynamics::solve_nse(config::build_u0(cfg, basis), model.f, grid);
  const rate::SkeletonOperator op(limit, model, grid);
  Rng rng = make_rng(0xacce5505);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    auto psi = noise::ControlField::zero_psi(model.marks.size(), grid.n_nodes());
    for (auto& v : psi.values()) v = nd(rng);
    const auto v = random_field_varied(basis, rng);
    const auto fwd = op.apply_forward(psi);
    const double lhs = spectral::inner_h(fwd, v), rhs = op.control_inner(psi, op.apply_adjoint(v));
    worst = std::max(worst, std::abs(lhs - rhs) / (spectral::h_norm(fwd) * spectral::h_norm(v)));
  }
  return {worst <= 1e-10, fmt::format("pairs=100 N={} steps={} max relative defect={:.2e} tol=1e-10", basis->N(),
                                      grid.n_steps(), worst)};
}

Verdict rate_oracle() {
  const auto cfg = load("tail.cfg");
  const auto basis = config::build_basis(cfg);
  const auto grid = config::build_grid(cfg);
  const auto model = config::build_noise(cfg, basis);
  const auto limit = dynamics::solve_nse(config::build_u0(cfg, basis), model.f, grid);
  const rate::SkeletonOperator op(limit, model, grid);
  const auto dense = oracle::materialize(op);
  Rng rng = make_rng(0xacce5506);
  std::normal_distribution<double> nd;
  rate::RateOptions ro;
  ro.tol = 1e-11;
  double worst = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    auto psi = noise::ControlField::zero_psi(model.marks.size(), grid.n_nodes());
    for (auto& v : psi.values()) v = nd(rng);
    const auto z = op.apply_forward(psi);
    const double I = rate::rate_terminal(op, z, ro).I;
    const double ref = oracle::dense_rate(dense, oracle::coords(z));
    worst = std::max(worst, std::abs(I - ref) / ref);
    const double I2 = rate::rate_terminal(op, 2.0 * z, ro).I;
    worst_h = std::max(worst_h, std::abs(I2 - 4.0 * I) / (4.0 * I));
  }
  const bool tiny = basis->N() == 1 && grid.n_steps() == 16 && model.marks.size() == 2;
  return {tiny && worst <= 1e-6 && worst_h <= 1e-8,
          fmt::format("N={} steps={} marks={} targets=10 max rel vs dense={:.2e} (tol 1e-6) "
                      "max rel I(2z)/4I-1={:.2e} (tol 1e-8)",
                      basis->N(), grid.n_steps(), model.marks.size(), worst, worst_h)};
}

Verdict strictly_decreasing(const experiment::ExperimentRecord& rec, const std::string& metric, std::size_t want) {
  const auto rows = sweep(rec, metric);
  bool ok = no_run_errors(rec) && rows.size() == want;
  for (std::size_t k = 1; ok && k < rows.size(); ++k) ok = rows[k]->estimate < rows[k - 1]->estimate;
  return {ok, fmt::format("{}: {}", metric, series(rows))};
}

Verdict thm35_trend() {
  const auto cfg = load("default.cfg");
  const auto rec = persist(experiment::run_thm35(cfg), cfg);
  auto v = strictly_decreasing(rec, "sup_h2", 3);
  v.pass = v.pass && cfg.N == 4 && cfg.replicas == 200;
  v.detail = fmt::format("N={} R={} E sup|X-u0|^2 {}", cfg.N, cfg.replicas, v.detail);
  return v;
}

Verdict prop33_trend() {
  const auto cfg = load("default.cfg");
  const auto rec = persist(experiment::run_prop33(cfg), cfg);
  auto v = strictly_decreasing(rec, "error", 3);
  const auto rows = sweep(rec, "error");
  const double ratio = rows.size() == 3 ? rows[2]->estimate / rows[0]->estimate : INFINITY;
  v.pass = v.pass && ratio < 0.1;
  v.detail += fmt::format("; final/first={:.4f} (< 0.1)", ratio);
  return v;
}

Verdict prop36_trend() {
  const auto cfg = load("default.cfg");
  const auto rec = persist(experiment::run_prop36(cfg), cfg);
  auto v = strictly_decreasing(rec, "gap", 3);
  v.detail = fmt::format("R={} mean sup|Y-eta|_H {}", cfg.replicas, v.detail);
  return v;
}

Verdict mdp_tail() {
  const auto cfg = load("tail.cfg");
  const auto rec = persist(experiment::run_mdp_tail(cfg), cfg);
  const auto ell = sweep(rec, "ell");
  bool trend = no_run_errors(rec) && ell.size() == cfg.eps.size();
  std::string d;
  // eps decreases down the sweep; non-increasing in eps means each value may
  // exceed its predecessor by at most 2 sigma of the difference
  for (std::size_t k = 1; trend && k < ell.size(); ++k) {
    const double s_prev = (ell[k - 1]->ci_high - ell[k - 1]->ci_low) / 4.0;
    const double s_cur = (ell[k]->ci_high - ell[k]->ci_low) / 4.0;
    trend = std::isfinite(s_prev) && std::isfinite(s_cur) &&
            ell[k - 1]->estimate - ell[k]->estimate >= -2.0 * std::hypot(s_prev, s_cur);
  }
  const double I_min = row_of(rec, "info.I_min").estimate;
  const double ratio = ell.empty() ? INFINITY : ell.back()->estimate / I_min;
  const bool factor = ratio >= 1.0 / 1.5 && ratio <= 1.5;
  d = fmt::format("N={} gamma={} R={} ell: {} ; I_min={:.4g} ell(eps_min)/I_min={:.4f} factor 1.5 {}", cfg.N,
                  cfg.gamma, cfg.replicas, series(ell), I_min, ratio, factor ? "met" : "NOT met (advisory)");
  return {trend && cfg.N <= 2 && cfg.gamma == 0.4 && cfg.replicas == 100000, d};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  // every experiment twice through the CLI, the second time single-threaded
  const std::vector<std::pair<std::string, std::string>> runs = {{"verify-core", "estimates.cfg"},
                                                                 {"thm35", "default.cfg"},
                                                                 {"prop33", "default.cfg"},
                                                                 {"prop36", "default.cfg"},
                                                                 {"mdp-tail", "tail.cfg"}};
  bool ok = true;
  std::string d;
  for (const auto& [name, cfg] : runs) {
    const std::string extra = name == "mdp-tail" ? " --replicas 5000" : "";
    std::string csv[2];
    for (int pass = 0; pass < 2; ++pass) {
      const auto dir = g_out / "determinism" / fmt::format("{}_{}", name, pass);
      fs::remove_all(dir);
      const std::string cmd =
          fmt::format("{}\"{}\" {} --config \"{}\" --out \"{}\"{} > /dev/null 2>&1",
                      pass ? "NSE_MDP_THREADS=1 " : "", NSE_MDP_CLI, name,
                      (fs::path(NSE_MDP_CONFIG_DIR) / cfg).string(), dir.string(), extra);
      const int rc = std::system(cmd.c_str());
      csv[pass] = slurp(dir / (name + ".csv"));
      ok = ok && rc == 0 && !csv[pass].empty();
    }
    const bool same = csv[0] == csv[1];
    ok = ok && same;
    d += fmt::format("{} {}; ", name, same ? "identical" : "DIFFERENT");
  }
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  g_out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_results");
  fs::create_directories(g_out);

  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"trilinear-identities", 60, trilinear_identities},
      {"inequality-suite", 120, inequality_suite},
      {"stokes-identity", 0, stokes_identity},
      {"energy-balance-order", 0, energy_order},
      {"poisson-engine", 0, poisson_engine},
      {"cost-functional", 0, cost_functional},
      {"adjoint-exactness", 0, adjoint_exactness},
      {"rate-oracle", 60, rate_oracle},
      {"controlled-convergence-trend", 900, thm35_trend},
      {"skeleton-continuity-trend", 300, prop33_trend},
      {"moderate-process-trend", 1200, prop36_trend},
      {"mdp-tail", 3600, mdp_tail},
      {"determinism", 0, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      v.pass = false;
      v.detail += fmt::format(" [over the {:.0f} s budget]", c.budget_s);
    }
    failed += !v.pass;
    fmt::print("{} {:<30} {} ({:.1f} s)\n", v.pass ? "PASS" : "FAIL", c.name, v.detail, secs);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
