#include "nse_mdp/sampling.hpp"

#include <cmath>
#include <cstdlib>

namespace nse_mdp {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) noexcept {
  return mix64(mix64(mix64(seed) ^ stream) ^ (replica * 0xd1b54a32d192ed03ULL));
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
  const std::uint64_t s = derive_seed(seed, stream, replica);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

spectral::SpectralField random_field(const spectral::BasisPtr& basis, Rng& rng,
                                     const RandomFieldOptions& opts) {
  std::normal_distribution<double> normal;
  spectral::SpectralField u(basis);
  const auto& modes = basis->modes();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const int kmax = std::max(std::abs(modes[i].k1), std::abs(modes[i].k2));
    const double re = normal(rng), im = normal(rng);
    if (opts.max_mode >= 0 && kmax > opts.max_mode) continue;
    const double k = std::hypot(static_cast<double>(modes[i].k1), static_cast<double>(modes[i].k2));
    u[i] = std::pow(k, -opts.slope) * spectral::complex(re, im);
  }
  const double h = spectral::h_norm(u);
  if (h > 0.0) u *= opts.amplitude / h;
  return u;
}

spectral::SpectralField random_field_varied(const spectral::BasisPtr& basis, Rng& rng,
                                            double amp_lo, double amp_hi) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RandomFieldOptions opts;
  opts.slope = 2.0 * unif(rng);
  opts.amplitude = amp_lo * std::pow(amp_hi / amp_lo, unif(rng));
  const double sparse = unif(rng);
  if (sparse < 0.25) opts.max_mode = 1 + static_cast<int>(unif(rng) * basis->N());
  return random_field(basis, rng, opts);
}

}  // namespace nse_mdp
