#pragma once

#include <stdexcept>
#include <string>

namespace r1fm {

// Bad shapes, out-of-range parameters, non-finite input.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// An iterative kernel did not meet its residual target.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace r1fm
