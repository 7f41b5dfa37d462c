#pragma once

#include <stdexcept>
#include <string>

namespace slt {

/// Mismatched shapes, site sets, or violated type invariants.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid/window/config combinations that cannot be represented.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Quadrature drift or lost resolution beyond the configured budget.
class NumericalIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slt
