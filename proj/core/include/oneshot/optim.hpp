#pragma once

// Solvers for the penalized empirical risk over x = (z, theta): the
// stochastic penalized gradient method, a deterministic batch minimizer,
// a closed-form quadratic oracle for linear surrogates and the reduced
// (state-eliminated) reference solve.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "oneshot/lbfgs.hpp"
#include "oneshot/objective.hpp"
#include "oneshot/rng.hpp"
#include "oneshot/surrogate.hpp"
#include "oneshot/types.hpp"

namespace oneshot::optim {

using objective::OptState;
using objective::ProblemData;

struct StepSchedule {
  enum class Kind { robbins_monro, constant };
  Kind kind = Kind::robbins_monro;
  double beta0 = 0.1;
  double k0 = 10.0;

  double at(long k) const noexcept {
    return kind == Kind::constant ? beta0 : beta0 / (static_cast<double>(k) + k0);
  }
};

struct PenaltySchedule {
  enum class Kind { constant, linear, adaptive };
  Kind kind = Kind::constant;
  double lambda0 = 1.0;
  /// Increment per iteration for the linear kind.
  double slope = 0.0;
  double lambda_bar = 0.0;
  double D = 0.0;

  /// lambda_k given the step size of the same iteration.
  double at(long k, double beta_k) const noexcept;
};

StepSchedule::Kind parse_step_kind(std::string_view name);
PenaltySchedule::Kind parse_penalty_kind(std::string_view name);
std::string_view to_string(StepSchedule::Kind kind);
std::string_view to_string(PenaltySchedule::Kind kind);

enum class UpdateRule { sgd, adam };

UpdateRule parse_update_rule(std::string_view name);
std::string_view to_string(UpdateRule rule);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Draws one parameter sample per call.
using Sampler = std::function<ParamSample(Rng&)>;

/// i.i.d. uniform on [-1, 1]^s.
Sampler uniform_sampler(int s);
/// Uniform choice from a fixed sample set (SGD on the empirical risk).
Sampler empirical_sampler(std::vector<ParamSample> samples);

struct IterationRecord {
  long k = 0;
  double beta = 0.0;
  double lambda = 0.0;
  /// f + lambda g at the drawn sample, before the update.
  double objective = 0.0;
  /// |x_k - x_ref|, NaN without a reference.
  double distance = 0.0;
};

struct PsgdOptions {
  StepSchedule steps;
  PenaltySchedule penalty;
  long n_iter = 1000;
  std::optional<double> radius;
  UpdateRule rule = UpdateRule::sgd;
  AdamParams adam;
  /// Defaults to uniform_sampler(data.s()).
  Sampler sampler;
  std::optional<OptState> reference;
  /// Record every log_stride-th iteration; 1 keeps the full history.
  long log_stride = 1;
  /// Called with (k + 1, x_{k+1}, lambda_k) every checkpoint_every iterations.
  long checkpoint_every = 0;
  std::function<void(long, const OptState&, double)> on_checkpoint;
};

struct PenaltyRun {
  OptState x;
  std::vector<IterationRecord> log;
  long iterations = 0;
  std::uint64_t seed = 0;
};

/// x_{k+1} = P_R(x_k - beta_k grad_x[f + lambda_k g](x_k, y_k)) with y_k drawn
/// from the sampler. Throws Divergence on a non-finite gradient or iterate.
PenaltyRun psgd(const ProblemData& data, const surrogate::Surrogate& sur, OptState x0,
                const PsgdOptions& options, Rng& rng);

/// Radial projection onto the ball of radius R.
OptState project_ball(const OptState& x, double R);

struct MinimizeResult {
  OptState x;
  long iterations = 0;
  double gradient_norm = 0.0;
  double value = 0.0;
  Termination termination = Termination::max_iterations;
};

/// L-BFGS on batch_objective. Throws StalledMinimizer on line-search failure.
MinimizeResult batch_minimize(const ProblemData& data, const surrogate::Surrogate& sur,
                              const OptState& x0, std::span<const ParamSample> samples,
                              double lambda, double tol, long max_iter);

/// The pERM for a linear surrogate as J(x) = 1/2 x^T H x - c^T x + constant
/// in the flat ordering [z; theta].
struct PermQuadratic {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;
  Eigen::Index n_control = 0;

  double value(const Vector& flat) const;
  Vector gradient(const Vector& flat) const;
};

PermQuadratic assemble_perm_quadratic(const ProblemData& data,
                                      const surrogate::LinearSurrogate& sur,
                                      std::span<const ParamSample> samples, double lambda);

/// Exact pERM minimizer for a linear surrogate. Throws RankDeficiency when the
/// normal system is numerically singular.
OptState linear_perm_oracle(const ProblemData& data, const surrogate::LinearSurrogate& sur,
                            std::span<const ParamSample> samples, double lambda);

/// Minimizer of the sample-averaged reduced problem by conjugate gradients.
Vector reduced_reference_solve(const ProblemData& data, std::span<const ParamSample> samples);

/// Spectral quantities entering the linear-surrogate bounds on g and grad g.
struct SpectralBounds {
  /// sigma_max(A(y))
  double a_max = 0.0;
  /// sigma_max(B^T B) = sigma_max(B B^T) for the design operator at y.
  double design = 0.0;
  /// sigma_max(M^T M)
  double control = 0.0;
};

SpectralBounds spectral_bounds(const ProblemData& data, const surrogate::LinearSurrogate& sur,
                               const ParamSample& y);

}  // namespace oneshot::optim
