#pragma once

#include <stdexcept>

namespace zrp {

/// Argument outside the mathematical domain of an operation (e.g. lambda >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or unsupported configuration (bad window, bad kernel, bad file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A runtime invariant of the dynamics was broken. Always indicates a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace zrp
