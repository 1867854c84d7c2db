#pragma once

#include <stdexcept>
#include <string>

namespace hcgb {

// Bad caller input: out-of-range indices, dimension mismatches, too few
// samples. Maps to CLI exit status 2 when it originates from user input.
using ArgumentError = std::invalid_argument;

// A precondition on the geometry does not hold (e.g. the symmetry condition
// fails, so the tangent cone or the script-T identity is not available).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numerical procedure did not reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// Malformed model or complex input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hcgb
