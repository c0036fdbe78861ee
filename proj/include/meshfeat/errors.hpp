#pragma once

#include <stdexcept>
#include <string>

namespace meshfeat {

/// Bad input data: malformed files, out-of-range indices, degenerate geometry.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed command line or configuration.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a failed iterative solve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace meshfeat
