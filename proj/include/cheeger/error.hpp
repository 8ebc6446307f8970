#pragma once

#include <stdexcept>
#include <string>

namespace cheeger {

/// Broad failure category; the command-line front end maps these to exit codes.
enum class ErrorKind {
  invalid_argument,  // bad input, precondition violation, malformed file
  solver_failure,    // iteration caps, non-finite values, collapse
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::invalid_argument, what) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual = 0.0)
      : Error(ErrorKind::solver_failure, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace cheeger
