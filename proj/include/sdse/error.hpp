#pragma once

#include <stdexcept>
#include <string>

namespace sdse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised while ingesting a configuration document. `key()` names the
/// offending element (empty for syntax errors, which carry a byte offset).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string key)
      : Error(message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Misuse of a work pool's lifecycle ("batch in flight", "pool closed").
class PoolError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdse
