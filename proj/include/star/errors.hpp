#pragma once

#include <stdexcept>
#include <string>

namespace star {

// Base class for library failures that are not plain precondition violations
// (those throw std::invalid_argument).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A logged action has (near-)zero behavior probability but positive
// probability under the evaluation policy, so its importance ratio is
// undefined. The message identifies episode and timestep.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

// The reward-process linear system is singular: some recurrent mass never
// terminates, so the expected return is undefined.
class NonTerminatingArp : public Error {
 public:
  using Error::Error;
};

// A file could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace star
