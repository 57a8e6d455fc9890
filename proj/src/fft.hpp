#pragma once

// Thin FFTW wrapper for square 2-D complex transforms. Plans are created once
// per grid size under a lock (the FFTW planner is not thread-safe) and then
// executed on caller-owned buffers, which is safe from any thread.

#include <complex>
#include <vector>

namespace nse_mdp::detail {

using cbuf = std::vector<std::complex<double>>;

/// In place, unnormalized: sum_k X_k exp(+2 pi i k.x/M).
void fft_backward(cbuf& data, int M);
/// In place, unnormalized: sum_x x_j exp(-2 pi i k.x/M).
void fft_forward(cbuf& data, int M);

inline int wrap(int k, int M) { return k >= 0 ? k : k + M; }

}  // namespace nse_mdp::detail
