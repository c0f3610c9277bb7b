#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace ioc_eiv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or matrix sizes disagree with the problem definition.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(Eigen::Index leading_minor)
      : Error("matrix is not positive definite (leading minor " +
              std::to_string(leading_minor) + ")"),
        leading_minor_(leading_minor) {}

  Eigen::Index leading_minor() const { return leading_minor_; }

 private:
  Eigen::Index leading_minor_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Iteration limits, degenerate configurations and other solver failures.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace ioc_eiv
