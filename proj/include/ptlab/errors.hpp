#pragma once

#include <stdexcept>
#include <string>

namespace ptlab {

/// A desk-scale size limit was exceeded. The message names the guard.
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

/// Quantal fit refused: no cell has 0 < pi_hat < 1.
class SeparationError : public std::runtime_error {
 public:
  explicit SeparationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ptlab
