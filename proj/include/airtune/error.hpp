#pragma once

#include <stdexcept>
#include <string>

namespace airtune {

/// Raised when a model, profile, or config value violates its invariants.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a value falls outside the range a transform was built for.
class OutOfRange : public std::out_of_range {
 public:
  explicit OutOfRange(const std::string& what) : std::out_of_range(what) {}
};

}  // namespace airtune
