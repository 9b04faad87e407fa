#pragma once

#include <stdexcept>
#include <string>

namespace mde {

// Exit codes shared by the library error types and the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Invalid configuration or API misuse (bad term index, dim = 0, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kUsage, what) {}
};

// Malformed or missing input files, vocabulary mismatches.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

// Non-finite losses or gradients.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ExitCode::kNumerical, what) {}
};

}  // namespace mde
