#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace ssn {

using Index = std::ptrdiff_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Linear map v -> Av, used for implicit operators and preconditioner inverses.
using LinearMap = std::function<Vector(const Vector&)>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatches and other broken preconditions.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class LineSearchFailure : public Error {
 public:
  using Error::Error;
};

class KrylovStagnation : public Error {
 public:
  using Error::Error;
};

class DenseThresholdExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace ssn
