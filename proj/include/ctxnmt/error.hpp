#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxnmt {

/// Bad or inconsistent configuration (flags, config file, empty ensemble).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violating a format or structural contract. Carries the
/// offending file and 1-based line when known.
class MalformedDataError : public std::runtime_error {
 public:
  explicit MalformedDataError(const std::string& what) : std::runtime_error(what) {}
  MalformedDataError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

/// Non-finite loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched arguments to a metric or statistic.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ctxnmt
