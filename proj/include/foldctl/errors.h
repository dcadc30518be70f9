#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace foldctl {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes do not match the system dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain of a chart, a chart overlap, or a map
/// (for example eps <= 0 for the central chart).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A model invariant is violated (constant term in F, non-positive gain, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// The input matrix loses full row rank at `point`.
class RankError : public Error {
 public:
  RankError(const std::string& what, Eigen::VectorXd point)
      : Error(what), point_(std::move(point)) {}
  const Eigen::VectorXd& point() const { return point_; }

 private:
  Eigen::VectorXd point_;
};

/// A sampled branch of the critical manifold is not normally hyperbolic.
/// `x` and `z` locate the offending sample.
class BranchError : public Error {
 public:
  BranchError(const std::string& what, Eigen::VectorXd x, double z)
      : Error(what), x_(std::move(x)), z_(z) {}
  const Eigen::VectorXd& x() const { return x_; }
  double z() const { return z_; }

 private:
  Eigen::VectorXd x_;
  double z_;
};

/// The adaptive integrator could not make progress.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, Eigen::VectorXd state)
      : Error(what), time_(time), state_(std::move(state)) {}
  double time() const { return time_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  double time_;
  Eigen::VectorXd state_;
};

}  // namespace foldctl
