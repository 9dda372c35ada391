#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chemofront {

/// Bad parameters, malformed config, inadmissible initial data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by critical_length when the limiting eigenvalue a0 - c^2/(4 d0) is not positive.
class NeverPositive : public InputError {
 public:
  using InputError::InputError;
};

/// The numerical scheme could not produce an admissible state.
class SchemeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PositivityViolation : public SchemeFailure {
 public:
  PositivityViolation(const std::string& species, std::size_t node, double value)
      : SchemeFailure("negative " + species + " at node " + std::to_string(node) +
                      " (value " + std::to_string(value) + ")"),
        species_(species),
        node_(node),
        value_(value) {}

  const std::string& species() const noexcept { return species_; }
  std::size_t node() const noexcept { return node_; }
  double value() const noexcept { return value_; }

 private:
  std::string species_;
  std::size_t node_;
  double value_;
};

}  // namespace chemofront
