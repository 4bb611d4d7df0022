#pragma once

#include <stdexcept>
#include <string>

namespace pairig {

/// Malformed input: dimension mismatch, out-of-range parameter, empty partition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of a bound or lemma evaluator is not met
/// (for example N below a theorem's validity threshold).
class PreconditionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Invalid solver or set configuration detected before any work is done.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite oracle output, non-convergence of an inner solver, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is not defined for this input class (e.g. diameter of an
/// unbounded set).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pairig
