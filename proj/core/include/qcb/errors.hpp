#pragma once

#include <stdexcept>
#include <string>

namespace qcb {

/// Bad input: violated precondition, malformed config, mismatched shapes.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A concentration support is too small for the ambient mesh to resolve.
class ResolutionError : public ValidationError {
 public:
  explicit ResolutionError(const std::string& what) : ValidationError(what) {}
};

/// A numerical procedure did not reach its stopping criterion.
class NonconvergenceError : public std::runtime_error {
 public:
  explicit NonconvergenceError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace qcb
