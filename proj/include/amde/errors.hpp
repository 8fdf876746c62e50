#pragma once

#include <stdexcept>
#include <string>

namespace amde {

// Error categories carried by every amde exception. Mirrored one-to-one by
// the amde_status codes of the C API.
enum class Status {
  Ok = 0,
  InvalidArgument,
  ConfigError,
  FormatError,
  TruncationError,
  IoError,
  StateError,
  DegenerateInput,
  InvariantViolation,
  Unknown,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

struct InvalidArgumentError : Error {
  explicit InvalidArgumentError(const std::string& what)
      : Error(Status::InvalidArgument, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(Status::ConfigError, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what)
      : Error(Status::FormatError, what) {}
};

struct TruncationError : Error {
  explicit TruncationError(const std::string& what)
      : Error(Status::TruncationError, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(Status::IoError, what) {}
};

struct StateError : Error {
  explicit StateError(const std::string& what)
      : Error(Status::StateError, what) {}
};

struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& what)
      : Error(Status::DegenerateInput, what) {}
};

struct InvariantViolationError : Error {
  explicit InvariantViolationError(const std::string& what)
      : Error(Status::InvariantViolation, what) {}
};

}  // namespace amde
