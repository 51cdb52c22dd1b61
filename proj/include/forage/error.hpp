#pragma once

#include <stdexcept>
#include <string>

namespace forage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is missing or invalid. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Input data failed to parse or violates a data invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not defined for this model kind.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

}  // namespace forage
