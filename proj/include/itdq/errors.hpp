#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace itdq {

// Failure of the model or inference (bad parameters, zero likelihood,
// non-finite iterates). The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An observation whose transition probability vanishes under the candidate
// potential. Carries the zero-based index of the offending observation.
class ZeroLikelihoodError : public DomainError {
 public:
  explicit ZeroLikelihoodError(std::size_t index)
      : DomainError("observation " + std::to_string(index) +
                    " has zero likelihood under the candidate potential"),
        index_(index) {}

  std::size_t observation_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Malformed or invalid configuration; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace itdq
