#pragma once

// Run configuration: an INI file with sections mirroring the fields below.
// Keys that are absent keep the defaults of the chosen experiment.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oneshot/objective.hpp"
#include "oneshot/optim.hpp"
#include "oneshot/surrogate.hpp"

namespace oneshot::config {

enum class ExperimentId { rate_n, rate_lambda, rate_combined, sgd_compare, mc_stats };

ExperimentId parse_experiment_id(std::string_view name);
std::string_view to_string(ExperimentId id);

/// How each pERM instance in the rate studies is solved.
enum class PermSolver { oracle, lbfgs };

PermSolver parse_perm_solver(std::string_view name);
std::string_view to_string(PermSolver solver);

struct RateSettings {
  PermSolver solver = PermSolver::oracle;
  /// Penalty for the sample-size study.
  double lambda = 1.0;
  /// Sample sizes 2^k for k in [k_min, k_max], reference 2^k_ref.
  int k_min = 1;
  int k_max = 13;
  int k_ref = 14;
  /// Frozen sample count for the penalty study.
  int n_fixed = 100;
  double lambda_min = 1.0;
  double lambda_max = 1e5;
  int lambda_points = 10;
  double lambda_ref = 1.7e6;
  /// lambda(N) = N^lambda_power in the combined study.
  double lambda_power = 0.25;
  double tol = 1e-10;
  long max_iter = 50000;
};

struct SgdSettings {
  /// Entries "legendre:<degree>" or "nn".
  std::vector<std::string> surrogates = {"legendre:1", "legendre:2", "legendre:3", "nn"};
  long n_iter = 3000000;
  optim::UpdateRule rule = optim::UpdateRule::adam;
  optim::StepSchedule steps{optim::StepSchedule::Kind::robbins_monro, 0.1, 100.0};
  /// lambda rises linearly from 1 to 300 over the default run length.
  optim::PenaltySchedule penalty{optim::PenaltySchedule::Kind::linear, 1.0, 299.0 / 3e6, 0.0, 0.0};
  /// Ball radius; 0 disables the projection.
  double radius = 0.0;
  /// Initial parameters for linear expansions and for networks.
  surrogate::InitMode init_linear = surrogate::InitMode::zeros;
  surrogate::InitMode init_nn = surrogate::InitMode::scaled_uniform;
  int n_reference = 1024;
  int n_heldout = 1000;
  int checkpoints = 20;
  long log_stride = 1000;
  /// Storage of the final parameters: "json" or "binary".
  std::string theta_format = "json";
};

struct McSettings {
  long samples = 100000;
  /// Load is scale * (x2^2 - x1^2).
  double load_scale = 1.0;
};

struct ExperimentConfig {
  ExperimentId id = ExperimentId::rate_n;
  std::uint64_t seed = 1;
  std::string output = "results";
  objective::ProblemSpec problem;
  surrogate::SurrogateSpec surrogate;
  RateSettings rate;
  SgdSettings sgd;
  McSettings mc;
};

/// Defaults for one experiment before any file overrides.
ExperimentConfig default_config(ExperimentId id);

/// Reads an INI file on top of default_config of its [experiment] id, or of
/// `fallback` when the file names none.
ExperimentConfig load_config(const std::string& path, ExperimentId fallback);
ExperimentConfig parse_config(std::string_view text, ExperimentId fallback);

/// INI text that parse_config reads back to the same configuration.
std::string to_ini(const ExperimentConfig& cfg);

}  // namespace oneshot::config
