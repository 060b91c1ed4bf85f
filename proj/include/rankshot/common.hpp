#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rankshot {

// A feature embedding: one 64-bit real per channel.
using FeatureVector = std::vector<double>;

// Raised for malformed or unusable input data (files, dataset shapes).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a computation leaves the finite domain (diverged training etc.).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool all_finite(const FeatureVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_same_dim(const FeatureVector& x, const FeatureVector& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  }
}

}  // namespace rankshot
