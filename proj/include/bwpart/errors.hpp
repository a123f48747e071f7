#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bwpart {

/// The scenario (or a requested partition) cannot meet its rate even
/// without interference, e.g. Eb/N0 at or below ln 2.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A radial interference sum hit its term cap before the far-field
/// tolerance was reached.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, std::size_t truncated)
      : std::runtime_error(what), truncated_(truncated) {}
  std::size_t truncated() const noexcept { return truncated_; }

 private:
  std::size_t truncated_;
};

class InsufficientSamplesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bwpart
