#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace safebandit {

/// Geometry failures that are properties of the input set rather than bugs.
class GeometryError : public std::runtime_error {
 public:
  enum class Kind { kEmptySet, kUnbounded, kDegenerate, kBudget, kDomain };

  GeometryError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// An iterative solver ran out of its iteration budget.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Dykstra projection did not converge; carries the last iterate.
class ProjectionError : public SolverError {
 public:
  ProjectionError(const std::string& what, Eigen::VectorXd last_iterate, double residual)
      : SolverError(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd last_iterate_;
  double residual_;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Text-format parse failure; `line` is 1-based (0 when not line specific).
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class InfeasibleScheduleError : public std::runtime_error {
 public:
  explicit InfeasibleScheduleError(const std::string& what) : std::runtime_error(what) {}
};

/// No candidate action passed the conservative safety test.
class EmptySafeSetError : public std::runtime_error {
 public:
  explicit EmptySafeSetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace safebandit
