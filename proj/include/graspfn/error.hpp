#pragma once

#include <stdexcept>
#include <string>

namespace graspfn {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value (pose, index, pixel) fell outside the domain it must live in.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Parameters that are individually well formed but cannot work together.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The input data cannot support the requested operation (e.g. an
/// all-zero depth image, an empty foreground mask).
class ContentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or data document.
class ParseError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace graspfn
