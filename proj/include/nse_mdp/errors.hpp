#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nse_mdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different bases (N, L, nu or padded grid differ).
class BasisMismatch : public Error {
 public:
  using Error::Error;
};

/// Time grids, mark sets or physical grids do not line up.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised by the explicit integrators when a coefficient becomes non-finite
/// or exceeds the divergence threshold.
class DivergedRun : public Error {
 public:
  DivergedRun(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Expected number of Poisson events exceeds the configured cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nse_mdp
