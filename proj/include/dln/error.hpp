#pragma once

#include <stdexcept>
#include <string>

namespace dln {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not chain, indices out of range: programmer errors.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A precondition of the called operation was not met by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

// An iterative numerical routine failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite weights.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& diagnostics)
      : Error("divergence at step " + std::to_string(step) + ": " + diagnostics),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Configuration parse/validation error, locating the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, int line, const std::string& what)
      : Error(format(key, line, what)), key_(key), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& what) {
    std::string out = "config error";
    if (!key.empty()) out += " at key '" + key + "'";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out + ": " + what;
  }
  std::string key_;
  int line_;
};

}  // namespace dln
