#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ppadf {

// Invalid model or experiment configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by validate() with every violated invariant, not just the first.
class ModelError : public ConfigError {
 public:
  explicit ModelError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Covariance lost positive definiteness, particle weights underflowed, or a
// trajectory overflowed. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files and malformed data files. Maps to exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppadf
