#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace seqrep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a precondition (dimension mismatch, empty input, bad config value).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A metric that needs a nonzero gradient was handed a zero vector.
class ZeroGradientError : public Error {
 public:
  explicit ZeroGradientError(const std::string& what, std::optional<std::size_t> task = std::nullopt)
      : Error(what), task_(task) {}

  std::optional<std::size_t> task() const { return task_; }

 private:
  std::optional<std::size_t> task_;
};

/// A loss or gradient became non-finite. Carries the inner step and task when known.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step, std::optional<std::size_t> task = std::nullopt)
      : Error(what), step_(step), task_(task) {}

  std::size_t step() const { return step_; }
  std::optional<std::size_t> task() const { return task_; }

 private:
  std::size_t step_;
  std::optional<std::size_t> task_;
};

/// Exact enumeration was requested over more sequences than the cap allows.
class EnumerationLimitError : public UsageError {
 public:
  using UsageError::UsageError;
};

}  // namespace seqrep
