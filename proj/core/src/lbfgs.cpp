#include "oneshot/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "oneshot/error.hpp"

namespace oneshot::optim {

namespace {

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop(const std::deque<Pair>& memory, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q.noalias() -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const Pair& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q.noalias() += (alpha[i] - beta) * memory[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& fun, Vector x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Vector g(result.x.size());
  double f = fun(result.x, g);
  result.value = f;
  result.gradient_norm = g.norm();

  std::deque<Pair> memory;
  Vector g_new(g.size());
  Vector x_new(g.size());
  long k = 0;
  while (true) {
    if (result.gradient_norm <= options.gradient_tolerance) {
      result.termination = Termination::gradient_tolerance;
      break;
    }
    if (k >= options.max_iterations) {
      result.termination = Termination::max_iterations;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vector d = memory.empty() ? Vector(-g) : two_loop(memory, g);
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        memory.clear();
        d = -g;
        slope = -g.squaredNorm();
      }
      double step = memory.empty() ? std::min(1.0, 1.0 / result.gradient_norm) : 1.0;
      for (int bt = 0; bt < options.max_backtracks; ++bt) {
        x_new = result.x + step * d;
        if (x_new == result.x) break;
        const double f_new = fun(x_new, g_new);
        if (std::isfinite(f_new)) {
          const bool armijo = f_new <= f + options.armijo * step * slope;
          const double slope_new = g_new.dot(d);
          const bool approx_wolfe = f_new <= f + 1e-12 * std::abs(f) &&
                                    slope_new >= 0.9 * slope && slope_new <= -0.8 * slope;
          if (armijo || approx_wolfe) {
            Pair p{x_new - result.x, g_new - g, 0.0};
            const double sy = p.s.dot(p.y);
            if (sy > 1e-300 && sy > 1e-12 * p.s.norm() * p.y.norm()) {
              p.rho = 1.0 / sy;
              memory.push_back(std::move(p));
              if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
            }
            result.x.swap(x_new);
            g.swap(g_new);
            f = f_new;
            accepted = true;
            break;
          }
        }
        step *= options.shrink;
      }
      if (!accepted) {
        if (memory.empty()) {
          throw StalledMinimizer("lbfgs: line search failed at iteration " + std::to_string(k) +
                                     " with gradient norm " + std::to_string(g.norm()),
                                 result.x);
        }
        memory.clear();
      }
    }
    ++k;
    result.value = f;
    result.gradient_norm = g.norm();
  }
  result.iterations = k;
  return result;
}

}  // namespace oneshot::optim
