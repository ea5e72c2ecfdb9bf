#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace oneshot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A diffusion coefficient that is not strictly positive somewhere.
class EllipticityViolation : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class RankDeficiency : public Error {
 public:
  using Error::Error;
};

/// Non-finite gradient or iterate inside the stochastic solver.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

class StalledMinimizer : public Error {
 public:
  StalledMinimizer(const std::string& what, Eigen::VectorXd last_iterate)
      : Error(what), last_(std::move(last_iterate)) {}
  const Eigen::VectorXd& last_iterate() const noexcept { return last_; }

 private:
  Eigen::VectorXd last_;
};

}  // namespace oneshot
