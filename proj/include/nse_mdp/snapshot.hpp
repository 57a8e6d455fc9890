#pragma once

// On-disk formats.
//
// Trajectory snapshot (.bin), all values little-endian IEEE-754 doubles
// after a 4-byte magic:
//   "NSE1" | N | n_steps | dt | nu | then for node n = 0..n_steps, for each
//   stored mode in basis order, re(c_k) im(c_k).
// Basis order: k2 = 0 with k1 = 1..N, then k2 = 1..N with k1 = -N..N.
// The domain length is not stored; readers take it from the config.

#include <filesystem>
#include <string>

#include "nse_mdp/noise.hpp"
#include "nse_mdp/rate.hpp"
#include "nse_mdp/time_grid.hpp"

namespace nse_mdp::io {

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

/// Reads a snapshot written for `basis`; throws BasisMismatch if N or nu differ.
Trajectory read_trajectory(const std::filesystem::path& path, const spectral::BasisPtr& basis);

/// Header only (N, n_steps, dt, nu).
struct SnapshotHeader {
  int N = 0;
  int n_steps = 0;
  double dt = 0.0;
  double nu = 0.0;
};
SnapshotHeader read_snapshot_header(const std::filesystem::path& path);

/// Columns t,mark_index,r (finite marks) or t,y,r (continuous marks).
void write_jumps_csv(const std::filesystem::path& path, const noise::JumpStream& jumps, bool finite_marks = true);

/// Columns mark_index,step,value.
void write_control_csv(const std::filesystem::path& path, const noise::ControlField& c);

/// {"I", "residual", "rel_residual", "iterations", "regularized"}
std::string rate_result_json(const rate::RateResult& res);

/// Shortest round-trip text for a double, used by every CSV writer.
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nse_mdp::io
