#include "nse_mdp/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fmt/format.h>
#include <functional>
#include <iostream>

#include "nse_mdp/config.hpp"
#include "nse_mdp/dynamics.hpp"
#include "nse_mdp/errors.hpp"
#include "nse_mdp/experiment.hpp"
#include "nse_mdp/rate.hpp"
#include "nse_mdp/snapshot.hpp"
#include "nse_mdp/stochastic.hpp"

#ifndef NSE_MDP_VERSION
#define NSE_MDP_VERSION "0.0.0"
#endif

namespace nse_mdp {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out = "results";
  std::uint64_t seed = 0;
  int replicas = 0;
};

void add_common(CLI::App* sub, Common& c, bool ensemble) {
  sub->add_option("--config", c.config, "experiment config file")->required();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "override the config seed");
  if (ensemble) sub->add_option("--replicas", c.replicas, "override the config ensemble size");
}

void print_rows(const experiment::ExperimentRecord& rec) {
  fmt::print("{} (config {}, seed {}, {:.1f} s)\n", rec.name, rec.config_hash, rec.seed, rec.wall_clock);
  for (const auto& r : rec.rows)
    fmt::print("  eps={:<8g} {:<28} {:>14.6g}  [{:.6g}, {:.6g}]  {}\n", r.eps, r.metric, r.estimate, r.ci_low,
               r.ci_high, r.verdict);
  fmt::print("verdict: {}\n", rec.passed ? "pass" : "fail");
}

using Runner = std::function<experiment::ExperimentRecord(const config::ExperimentConfig&,
                                                          const experiment::RunOptions&)>;

int run_experiment(const Common& c, const Runner& runner) {
  const auto cfg = config::load_config(c.config);
  experiment::RunOptions opts;
  opts.seed = c.seed;
  opts.replicas = c.replicas;
  const auto rec = runner(cfg, opts);
  experiment::write_record(rec, cfg, c.out);
  print_rows(rec);
  return rec.passed ? 0 : 1;
}

int cmd_simulate(const Common& c, double eps_override, bool controlled, bool keep_jumps) {
  const auto cfg = config::load_config(c.config);
  const std::uint64_t seed = c.seed != 0 ? c.seed : cfg.seed;
  const auto basis = config::build_basis(cfg);
  const auto grid = config::build_grid(cfg);
  const auto noise = config::build_noise(cfg, basis);
  const auto u0 = config::build_u0(cfg, basis);
  const stochastic::ScalingSpec scaling(eps_override > 0.0 ? eps_override : cfg.eps.front(), cfg.gamma);
  stochastic::SimulationOptions so;
  so.event_budget = cfg.event_budget;
  so.keep_jumps = keep_jumps;
  const auto run = controlled ? stochastic::simulate_controlled_X(scaling, u0, noise, config::build_psi(cfg, grid),
                                                                  grid, seed, so)
                              : stochastic::simulate_u_eps(scaling, u0, noise, grid, seed, so);
  fs::create_directories(c.out);
  io::write_trajectory(fs::path(c.out) / "trajectory.bin", run.path);
  if (keep_jumps) io::write_jumps_csv(fs::path(c.out) / "jumps.csv", run.jumps, noise.marks.is_finite());
  const auto d = path_diagnostics(run.path);
  nlohmann::ordered_json m;
  m["config_hash"] = cfg.hash;
  m["seed"] = seed;
  m["eps"] = scaling.eps();
  m["gamma"] = scaling.gamma();
  m["a_eps"] = scaling.a();
  m["controlled"] = controlled;
  m["n_events"] = run.n_events;
  m["diagnostics"] = {{"sup_h2", d.sup_h2}, {"int_v2", d.int_v2}, {"terminal_h", d.terminal_h},
                      {"terminal_v", d.terminal_v}};
  m["tool_version"] = NSE_MDP_VERSION;
  io::write_text(fs::path(c.out) / "simulate_manifest.json", m.dump(2) + "\n");
  fmt::print("simulated eps={} with {} jumps; |u(T)|_H = {:.6g}\n", scaling.eps(), run.n_events, d.terminal_h);
  return 0;
}

int cmd_skeleton(const Common& c) {
  const auto cfg = config::load_config(c.config);
  const auto basis = config::build_basis(cfg);
  const auto grid = config::build_grid(cfg);
  const auto noise = config::build_noise(cfg, basis);
  const auto limit = dynamics::solve_nse(config::build_u0(cfg, basis), noise.f, grid);
  fs::create_directories(c.out);
  io::write_trajectory(fs::path(c.out) / "limit.bin", limit);
  if (noise.marks.size() > 0) {
    const auto eta = dynamics::solve_skeleton(config::build_psi(cfg, grid), limit, noise, grid);
    io::write_trajectory(fs::path(c.out) / "skeleton.bin", eta);
    fmt::print("skeleton |eta(T)|_H = {:.6g}\n", spectral::h_norm(eta.back()));
  }
  return 0;
}

int cmd_rate(const Common& c, const std::string& target_path, double radius) {
  const auto cfg = config::load_config(c.config);
  const auto basis = config::build_basis(cfg);
  const auto grid = config::build_grid(cfg);
  const auto noise = config::build_noise(cfg, basis);
  const auto limit = dynamics::solve_nse(config::build_u0(cfg, basis), noise.f, grid);
  const rate::SkeletonOperator op(limit, noise, grid);
  rate::RateOptions ro;
  ro.tol = cfg.cg_tol;
  ro.tikhonov = cfg.tikhonov;
  ro.max_iter = cfg.cg_max_iter;
  fs::create_directories(c.out);
  if (!target_path.empty()) {
    const auto target = io::read_trajectory(target_path, basis).fields.back();
    const auto res = rate::rate_terminal(op, target, ro);
    io::write_text(fs::path(c.out) / "rate.json", io::rate_result_json(res));
    io::write_control_csv(fs::path(c.out) / "psi_star.csv", res.psi_star);
    fmt::print("I = {:.10g} after {} iterations (relative residual {:.3e})\n", res.I, res.iterations,
               res.rel_residual);
    return 0;
  }
  rate::LevelSetOptions lo;
  lo.n_random = cfg.directions;
  lo.seed = c.seed != 0 ? c.seed : cfg.seed;
  lo.rate = ro;
  const double r = radius > 0.0 ? radius : cfg.radius;
  const auto level = rate::rate_level_set(op, r, lo);
  nlohmann::ordered_json j;
  j["radius"] = r;
  j["I_min"] = level.I_min;
  j["directions_tried"] = level.directions_tried;
  j["directions_failed"] = level.directions_failed;
  io::write_text(fs::path(c.out) / "level_set.json", j.dump(2) + "\n");
  io::write_trajectory(fs::path(c.out) / "level_set_target.bin", Trajectory{0.0, 0.0, {level.target}});
  fmt::print("I_min(r={}) = {:.10g} over {} directions\n", r, level.I_min, level.directions_tried);
  return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  const auto summary = experiment::report_data(in);
  nlohmann::ordered_json j;
  j["all_passed"] = summary.all_passed;
  j["all_consistent"] = summary.all_consistent;
  j["experiments"] = summary.details;
  fs::create_directories(out);
  io::write_text(fs::path(out) / "report_data.json", j.dump(2) + "\n");
  for (const auto& d : summary.details)
    fmt::print("{:<12} {} {}\n", d["experiment"].get<std::string>(), d["passed"].get<bool>() ? "pass" : "fail",
               d["consistent"].get<bool>() ? "" : "(persisted verdicts differ)");
  return summary.all_passed && summary.all_consistent ? 0 : 1;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Stochastic Navier-Stokes moderate-deviation toolkit", "nse-mdp"};
  app.set_version_flag("--version", NSE_MDP_VERSION);
  app.require_subcommand(1);

  Common verify, sim, skel, rt, thm35, prop33, prop36, tail;
  add_common(app.add_subcommand("verify-core", "identities, inequalities, energy balance"), verify, false);
  auto* s_sim = app.add_subcommand("simulate", "simulate u^eps or the controlled process");
  add_common(s_sim, sim, false);
  double eps = 0.0;
  bool controlled = false, keep_jumps = false;
  s_sim->add_option("--eps", eps, "noise size (default: first eps of the config)");
  s_sim->add_flag("--controlled", controlled, "use phi = 1 + a psi from the config");
  s_sim->add_flag("--keep-jumps", keep_jumps, "write the realized jumps as CSV");
  add_common(app.add_subcommand("skeleton", "solve the limit and skeleton equations"), skel, false);
  auto* s_rate = app.add_subcommand("rate", "rate function of a terminal state or a level set");
  add_common(s_rate, rt, false);
  std::string target;
  double radius = 0.0;
  s_rate->add_option("--target", target, "trajectory snapshot whose last node is the target");
  s_rate->add_option("--radius", radius, "level-set radius (default: experiment.radius)");
  add_common(app.add_subcommand("thm35", "controlled process converges to the limit"), thm35, true);
  add_common(app.add_subcommand("prop33", "skeleton continuity under weak convergence"), prop33, false);
  add_common(app.add_subcommand("prop36", "moderate process converges to the skeleton"), prop36, true);
  add_common(app.add_subcommand("mdp-tail", "tail exponent against the rate function"), tail, true);
  auto* s_report = app.add_subcommand("report-data", "re-judge persisted experiment CSVs");
  std::string report_in, report_out = "report";
  s_report->add_option("--in", report_in, "results directory")->required();
  s_report->add_option("--out", report_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "verify-core") return run_experiment(verify, experiment::run_estimates_suite);
    if (name == "simulate") return cmd_simulate(sim, eps, controlled, keep_jumps);
    if (name == "skeleton") return cmd_skeleton(skel);
    if (name == "rate") return cmd_rate(rt, target, radius);
    if (name == "thm35") return run_experiment(thm35, experiment::run_thm35);
    if (name == "prop33") return run_experiment(prop33, experiment::run_prop33);
    if (name == "prop36") return run_experiment(prop36, experiment::run_prop36);
    if (name == "mdp-tail") return run_experiment(tail, experiment::run_mdp_tail);
    if (name == "report-data") return cmd_report(report_in, report_out);
  } catch (const DivergedRun& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const BudgetExceeded& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const rate::ConvergenceFailure& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace nse_mdp
