#pragma once

// End-to-end studies: convergence rates of the pERM solution in the sample
// size and the penalty, the stochastic solver against a reduced reference,
// and Monte Carlo statistics of the parametric state.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "oneshot/config.hpp"
#include "oneshot/fem.hpp"
#include "oneshot/objective.hpp"
#include "oneshot/optim.hpp"
#include "oneshot/types.hpp"

namespace oneshot::experiments {

/// Least-squares line through (log x, log y).
struct RateFit {
  std::vector<double> abscissae;
  std::vector<double> squared_errors;
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the fit in log space.
  double residual = 0.0;
};

/// Requires at least 4 strictly positive pairs.
RateFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct RateCurve {
  /// Fit of the summed control and parameter error.
  RateFit fit;
  std::vector<double> control_errors;
  std::vector<double> theta_errors;
  double wall_seconds = 0.0;
};

/// First `count` draws of the seeded sample stream; smaller counts are
/// prefixes of larger ones.
std::vector<ParamSample> nested_samples(std::uint64_t seed, int s, std::size_t count);

/// Solves one pERM instance with the configured solver.
optim::OptState solve_perm(const objective::ProblemData& data, const surrogate::Surrogate& sur,
                           std::span<const ParamSample> samples, double lambda,
                           const config::RateSettings& settings);

RateCurve run_rate_vs_N(const config::ExperimentConfig& cfg);
RateCurve run_rate_vs_lambda(const config::ExperimentConfig& cfg);
RateCurve run_combined(const config::ExperimentConfig& cfg);

struct SgdCheckpoint {
  long iteration = 0;
  double lambda = 0.0;
  /// |z_k - z_ref|^2
  double control_error = 0.0;
  /// Held-out means of |u_theta - u_ref|^2, |A u_theta - M z|^2, |u_theta - u0|^2.
  double state_error = 0.0;
  double residual = 0.0;
  double target_misfit = 0.0;
};

struct SgdTrace {
  std::string label;
  std::size_t param_count = 0;
  std::vector<SgdCheckpoint> checkpoints;
  optim::PenaltyRun run;
};

struct SgdComparison {
  Vector z_ref;
  std::vector<SgdTrace> traces;
  double wall_seconds = 0.0;
};

/// Surrogate spec from an entry "legendre:<degree>", "monomial:<degree>" or "nn".
surrogate::SurrogateSpec parse_surrogate_entry(const std::string& entry,
                                               const surrogate::SurrogateSpec& base);

SgdComparison run_sgd_vs_reference(const config::ExperimentConfig& cfg);

/// One-pass mean and variance of vector samples, mergeable across streams.
class Welford {
 public:
  explicit Welford(Eigen::Index dim = 0);

  void add(const Vector& x);
  void merge(const Welford& other);

  long count() const noexcept { return count_; }
  const Vector& mean() const noexcept { return mean_; }
  /// Unbiased sample variance; zero below two samples.
  Vector variance() const;

 private:
  long count_ = 0;
  Vector mean_;
  Vector m2_;
};

struct McStats {
  fem::Mesh mesh;
  Vector mean;
  Vector stddev;
  long samples = 0;
  double wall_seconds = 0.0;
};

McStats monte_carlo_state_stats(const config::ExperimentConfig& cfg);
/// Same with an explicit sampler, e.g. a degenerate one.
McStats monte_carlo_state_stats(const config::ExperimentConfig& cfg, const optim::Sampler& sampler,
                                Rng& rng);

}  // namespace oneshot::experiments
