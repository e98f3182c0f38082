#pragma once

#include <stdexcept>
#include <string>

namespace mhsp {

// Base class for every error raised by the toolkit. The `kind()` string is
// stable and is what the CLI writes into its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error("dimension_mismatch", message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("validation", message) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error("parse", message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error("numerical_instability", message) {}
};

class InfeasibleFixError : public Error {
 public:
  explicit InfeasibleFixError(const std::string& message)
      : Error("infeasible_fix", message) {}
};

class RecourseError : public Error {
 public:
  explicit RecourseError(const std::string& message)
      : Error("recourse_violated", message) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& message)
      : Error("solver_failure", message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error("transport", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("configuration", message) {}
};

}  // namespace mhsp
