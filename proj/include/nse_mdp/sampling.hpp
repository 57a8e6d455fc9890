#pragma once

// Seeding and random-field helpers shared by the stochastic solver, the
// verification suites and the tests.

#include <cstdint>
#include <random>

#include "nse_mdp/spectral.hpp"

namespace nse_mdp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic substream seed for (seed, stream, replica). Documented
/// contract: every replica of every sweep point gets its own generator, so
/// results do not depend on how replicas are scheduled across workers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) noexcept;

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t replica = 0);

struct RandomFieldOptions {
  int max_mode = -1;      ///< only modes with max(|k1|,|k2|) <= max_mode (-1: all)
  double slope = 1.0;     ///< coefficient std ~ |k|^{-slope}
  double amplitude = 1.0; ///< target |u|_H
};

/// Gaussian coefficients with a power-law envelope, rescaled to |u|_H = amplitude.
spectral::SpectralField random_field(const spectral::BasisPtr& basis, Rng& rng,
                                     const RandomFieldOptions& opts = {});

/// Random field whose spectral slope and amplitude are themselves randomized
/// (log-uniform amplitude in [amp_lo, amp_hi], slope in [0, 2]).
spectral::SpectralField random_field_varied(const spectral::BasisPtr& basis, Rng& rng,
                                            double amp_lo = 1e-2, double amp_hi = 1e2);

}  // namespace nse_mdp
