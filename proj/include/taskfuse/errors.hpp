#pragma once

#include <stdexcept>
#include <string>

namespace taskfuse {

// Bad input data, file, or configuration. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values appeared in the solver iterates. CLI exit code 3.
class SolverDivergenceError : public std::runtime_error {
 public:
  SolverDivergenceError(const std::string& msg, int iteration)
      : std::runtime_error(msg), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace taskfuse
