#pragma once

#include <stdexcept>
#include <string>

namespace bpsplit {

// Invalid user configuration (bad prime, inconsistent ranges). CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structurally invalid input data (dependent basis, wrong dimensions, bad text).
class MalformedInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A Q-span that is not closed under a required operator.
class ClosureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested degree range reaches past what a truncated module determines.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal consistency assertion failed (a convention bug, not user error).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A claimed free summand admits no retraction (it is not free).
class SplittingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bpsplit
