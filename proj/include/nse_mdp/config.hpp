#pragma once

// Experiment configuration: an INI file with the sections below. Every key
// is optional except where noted; unknown sections or keys are rejected.
//
//   [basis]       N, nu, L, dealias
//   [grid]        T, n_steps
//   [initial]     u0                      field spec
//   [force]       f, omega                field spec; f(t) = cos(omega t) f
//   [noise]       weights (required), h, g0, c, m, event_budget
//   [scaling]     gamma, eps              eps list strictly decreasing
//   [experiment]  replicas, seed, psi, oscillation, fine_steps, radius,
//                 samples, stokes_samples, control_bound, directions
//   [tolerances]  identity, cg, tikhonov, cg_max_iter, tail_factor, order_lo, order_hi
//
// A field spec lists modes as "k1 k2 re im" separated by ';', e.g.
//   u0 = 1 0 0.5 0; 0 1 0 -0.25
// Per-mark lists (weights, h, psi, oscillation) are whitespace separated.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nse_mdp/noise.hpp"
#include "nse_mdp/spectral.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::config {

struct ExperimentConfig {
  // [basis]
  int N = 4;
  double nu = 0.1;
  double L = 2.0 * 3.14159265358979323846;
  double dealias = 1.5;
  // [grid]
  double T = 1.0;
  int n_steps = 64;
  // [initial], [force]
  std::string u0;
  std::string f;
  double omega = 0.0;
  // [noise]: G(x, y_i) = h_i (g0 + c P_{<=m} x)
  std::vector<double> weights;
  std::vector<double> h;
  std::string g0;
  double c = 0.0;
  int m = -1;  ///< -1: all modes
  double event_budget = 1e7;
  // [scaling]
  double gamma = 0.4;
  std::vector<double> eps{1e-1, 1e-2, 1e-3};
  // [experiment]
  int replicas = 200;
  std::uint64_t seed = 1;
  std::vector<double> psi;          ///< per-mark constant control (empty: 0)
  std::vector<double> oscillation;  ///< per-mark amplitude w of sin(t/eps) w
  int fine_steps = 4096;            ///< time steps for the oscillatory family
  double radius = 1.0;              ///< tail threshold r
  int samples = 10000;              ///< random triples for the estimate suite
  int stokes_samples = 1000;
  double control_bound = 100.0;     ///< M in L_T(phi) <= M a^2
  int directions = 32;              ///< random directions in the level-set search
  // [tolerances]
  double identity_tol = 1e-10;
  double cg_tol = 1e-8;
  double tikhonov = 0.0;
  int cg_max_iter = 0;
  double tail_factor = 1.5;
  double order_lo = 1.7;
  double order_hi = 2.3;

  /// section -> key -> raw value, as read.
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::string hash;  ///< FNV-1a 64 of the canonical key=value listing, hex

  std::size_t n_marks() const noexcept { return weights.size(); }
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "section.key=value" lines, sorted.
std::string canonical_text(const ExperimentConfig& cfg);

/// Parses "k1 k2 re im; ..." into a field on `basis`.
spectral::SpectralField parse_field(const std::string& spec, const spectral::BasisPtr& basis);
std::vector<double> parse_list(const std::string& text);

spectral::BasisPtr build_basis(const ExperimentConfig& cfg);
TimeGrid build_grid(const ExperimentConfig& cfg);
TimeGrid build_grid(const ExperimentConfig& cfg, int n_steps);
spectral::SpectralField build_u0(const ExperimentConfig& cfg, const spectral::BasisPtr& basis);
ForceSpec build_force(const ExperimentConfig& cfg, const spectral::BasisPtr& basis);
noise::NoiseModel build_noise(const ExperimentConfig& cfg, const spectral::BasisPtr& basis);
/// psi constant in time on `grid` (zero when the config has none).
noise::ControlField build_psi(const ExperimentConfig& cfg, const TimeGrid& grid);

}  // namespace nse_mdp::config
