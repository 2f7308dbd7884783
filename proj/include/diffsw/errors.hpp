#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffsw {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short category tag used by the CLI when printing machine-parseable errors.
  virtual const char* category() const noexcept { return "error"; }
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "shape"; }
};

class StaggerMismatch : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "stagger"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "domain"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "argument"; }
};

class CflViolation : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "cfl"; }
};

/// A step produced NaN or Inf; `field()` names the offending prognostic field.
class NonFiniteState : public Error {
 public:
  NonFiniteState(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  const char* category() const noexcept override { return "nonfinite"; }

 private:
  std::string field_;
};

class UnregisteredPrimitive : public Error {
 public:
  explicit UnregisteredPrimitive(const std::string& name)
      : Error("unregistered primitive '" + name + "'") {}
  const char* category() const noexcept override { return "autodiff"; }
};

class DuplicateRegistration : public Error {
 public:
  explicit DuplicateRegistration(const std::string& name)
      : Error("custom gradient for primitive '" + name + "' is already registered") {}
  const char* category() const noexcept override { return "autodiff"; }
};

/// The reverse-mode tape ran out of its memory budget.
class TapeExhausted : public Error {
 public:
  TapeExhausted(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const noexcept { return step_; }
  const char* category() const noexcept override { return "resource"; }

 private:
  int step_;
};

class OptimizationDiverged : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "optimizer"; }
};

}  // namespace diffsw
