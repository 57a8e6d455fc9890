#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace nse_mdp::detail {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

const PlanPair& plans_for(int M) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[M];
  if (!slot) {
    slot = std::make_unique<PlanPair>();
    cbuf scratch(static_cast<std::size_t>(M) * M);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    slot->forward = fftw_plan_dft_2d(M, M, p, p, FFTW_FORWARD, flags);
    slot->backward = fftw_plan_dft_2d(M, M, p, p, FFTW_BACKWARD, flags);
  }
  return *slot;
}

}  // namespace

void fft_backward(cbuf& data, int M) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(M).backward, p, p);
}

void fft_forward(cbuf& data, int M) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(M).forward, p, p);
}

}  // namespace nse_mdp::detail
