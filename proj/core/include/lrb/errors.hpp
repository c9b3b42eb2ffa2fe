#pragma once

#include <stdexcept>
#include <string>

namespace lrb {

// Numeric routine failed to converge; carries the last residual for diagnosis.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

// Second-moment estimate has fewer than the requested number of positive
// eigenvalues; signals insufficient exploration data.
class RankDeficientMoments : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Unregularized design matrix is singular (some arm never played).
class UninitializedDesign : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace lrb
