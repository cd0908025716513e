#pragma once

#include <stdexcept>
#include <string>

namespace scoreflow {

// Invalid configuration or input value; `key` names the offending entry when
// the error originates from a config file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, std::string key = "")
      : std::runtime_error(msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Frame/sequence file errors with distinct codes per failure class.
class IoError : public std::runtime_error {
 public:
  enum class Code { BadMagic, InvalidHeader, CorruptFrame, ShapeMismatch, NonFinite, Os };

  IoError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Numerical failure (divergence, non-finite state); `step` is the iteration
// index when applicable, -1 otherwise.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg, long step = -1)
      : std::runtime_error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace scoreflow
