#pragma once

#include <stdexcept>
#include <string>

namespace scancalib {

// Axis extraction was requested for a rotation whose angle is below the
// representable floor (the axis of an identity-like rotation is undefined).
class DegenerateRotationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Point clouds expressed in different frames were combined without a transform.
class FrameMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A profile record violates the constant end-effector orientation requirement.
class AssumptionViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, long line)
      : std::runtime_error(message + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

// Coarse alignment could not produce a usable initial transform.
class CoarseAlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fine registration failed (e.g. every correspondence was rejected).
class RegistrationFailedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scancalib
