#pragma once

// Result files: CSV curves and logs, JSON run summaries, and surrogate
// parameter vectors in JSON or flat binary form.

#include <filesystem>
#include <string>

#include "oneshot/config.hpp"
#include "oneshot/experiments.hpp"
#include "oneshot/optim.hpp"
#include "oneshot/surrogate.hpp"

namespace oneshot::output {

namespace fs = std::filesystem;

/// Columns: abscissa, squared_error_control, squared_error_theta.
void write_rate_csv(const fs::path& path, const experiments::RateCurve& curve);
void write_rate_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                        const experiments::RateCurve& curve);

void write_penalty_log(const fs::path& path, const optim::PenaltyRun& run);
void write_sgd_checkpoints(const fs::path& path, const experiments::SgdTrace& trace);
void write_sgd_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                       const experiments::SgdComparison& result);

/// Every mesh node with mean, std and the 1- and 2-sigma bands; boundary rows are zero.
void write_mc_table(const fs::path& path, const experiments::McStats& stats);
void write_mc_summary(const fs::path& path, const config::ExperimentConfig& cfg,
                      const experiments::McStats& stats);

/// Parameter vector with the surrogate kind and flattening order.
struct ThetaRecord {
  std::string kind;
  std::string flattening;
  Vector theta;
};

void save_theta_json(const fs::path& path, const surrogate::Surrogate& sur, const Vector& theta);
ThetaRecord load_theta_json(const fs::path& path);

/// Layout: 8-byte magic "ONESHOTT", uint64 header length, JSON header text
/// naming kind, flattening and count, then count little-endian doubles.
void save_theta_binary(const fs::path& path, const surrogate::Surrogate& sur, const Vector& theta);
ThetaRecord load_theta_binary(const fs::path& path);

}  // namespace oneshot::output
