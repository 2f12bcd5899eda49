#pragma once

#include <stdexcept>
#include <string>

namespace rankprobe {

// Caller passed something outside an operation's preconditions
// (out-of-range ids, overlapping sets, infeasible generator parameters).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A structural invariant that should hold by construction was observed broken.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Measurements are not the image of any binary vector under a detecting matrix.
class DecodeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An additive-query protocol produced answers inconsistent with its precondition.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rankprobe
