#pragma once

#include <functional>

#include "oneshot/types.hpp"

namespace oneshot::optim {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
  double gradient_tolerance = 1e-8;
  long max_iterations = 1000;
  int history = 10;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
};

enum class Termination { gradient_tolerance, max_iterations };

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  long iterations = 0;
  Termination termination = Termination::max_iterations;
};

/// Limited-memory BFGS with a backtracking line search. A step is accepted on
/// sufficient decrease, or on the approximate Wolfe conditions once the
/// decrease drops below roundoff. Throws StalledMinimizer when no step is
/// accepted even from a steepest-descent restart.
LbfgsResult lbfgs_minimize(const Objective& fun, Vector x0, const LbfgsOptions& options);

}  // namespace oneshot::optim
