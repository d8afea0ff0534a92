#pragma once

#include <stdexcept>
#include <string>

namespace convlab {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorCategory {
  validation,  // bad parameters or malformed input
  numerical,   // a numerical tolerance could not be met
  io,          // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Parameter outside its mathematical domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorCategory::validation, what) {}
};

/// Threshold leverage optimisation requested with gamma = 0.
class UnboundedLeverageError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Operation needs a differentiable policy and got something else.
class UnsupportedPolicyError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Regression or statistic undefined for the given data.
class DegenerateSeriesError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A malformed input row. `line` is 1-based and counts the header.
class IngestError : public DomainError {
 public:
  IngestError(std::size_t line, const std::string& what)
      : DomainError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved_tolerance)
      : Error(ErrorCategory::numerical, what), achieved_(achieved_tolerance) {}

  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(ErrorCategory::io, path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace convlab
