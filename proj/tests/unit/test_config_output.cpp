#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oneshot/config.hpp"
#include "oneshot/error.hpp"
#include "oneshot/experiments.hpp"
#include "oneshot/output.hpp"

using namespace oneshot;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oneshot_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Config, DefaultsPerExperiment) {
  const auto n = config::default_config(config::ExperimentId::rate_n);
  EXPECT_EQ(n.problem.n_div, 8);
  EXPECT_EQ(n.problem.s, 4);
  EXPECT_EQ(n.problem.alpha, 0.5);
  EXPECT_EQ(n.surrogate.degree, 2);
  EXPECT_EQ(n.output, "results/rate-n");
  const auto c = config::default_config(config::ExperimentId::rate_combined);
  EXPECT_EQ(c.rate.lambda_power, 0.25);
}

TEST(Config, ParseOverridesAndRoundTrip) {
  const std::string text =
      "[experiment]\nid = sgd-compare\nseed = 42\n"
      "[mesh]\nn_div = 6\n"
      "[objective]\ncontrol_norm = euclidean\nalpha = 0.25\n"
      "[surrogate]\nhidden = 4, 5\n"
      "[sgd]\nsurrogates = legendre:1, nn\npenalty_kind = adaptive\nlambda_bar = 30\nD = 2\n";
  const auto cfg = config::parse_config(text, config::ExperimentId::rate_n);
  EXPECT_EQ(cfg.id, config::ExperimentId::sgd_compare);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.problem.n_div, 6);
  EXPECT_EQ(cfg.problem.control_norm, objective::ControlNorm::euclidean);
  EXPECT_EQ(cfg.problem.alpha, 0.25);
  EXPECT_EQ(cfg.surrogate.hidden, (std::vector<int>{4, 5}));
  EXPECT_EQ(cfg.sgd.surrogates, (std::vector<std::string>{"legendre:1", "nn"}));
  EXPECT_EQ(cfg.sgd.penalty.kind, optim::PenaltySchedule::Kind::adaptive);

  const auto again = config::parse_config(config::to_ini(cfg), config::ExperimentId::rate_n);
  EXPECT_EQ(config::to_ini(again), config::to_ini(cfg));
  EXPECT_EQ(again.sgd.penalty.D, 2.0);
  EXPECT_EQ(again.problem.theta_decay, cfg.problem.theta_decay);
}

TEST(Config, RejectsBadInput) {
  const auto id = config::ExperimentId::rate_n;
  EXPECT_THROW(config::parse_config("[mesh]\nndiv = 8\n", id), InvalidArgument);
  EXPECT_THROW(config::parse_config("[mesh]\nn_div = eight\n", id), InvalidArgument);
  EXPECT_THROW(config::parse_config("[experiment]\nid = rate-x\n", id), InvalidArgument);
  EXPECT_THROW(config::parse_config("[sgd]\nrule = rmsprop\n", id), InvalidArgument);
  EXPECT_THROW(config::parse_config("[sgd]\ntheta_format = hdf5\n", id), InvalidArgument);
  EXPECT_THROW(config::parse_config("no section\n[", id), InvalidArgument);
  EXPECT_THROW(config::load_config("/nonexistent/oneshot.ini", id), InvalidArgument);
}

TEST(Output, ThetaJsonRoundTrip) {
  const auto sur = surrogate::make_surrogate({"legendre", 2, {}, surrogate::InitMode::ones}, 4, 9);
  Rng rng(3);
  const Vector theta = sur->initial(surrogate::InitMode::scaled_uniform, rng);
  const auto path = scratch("theta.json");
  output::save_theta_json(path, *sur, theta);
  const auto rec = output::load_theta_json(path);
  EXPECT_EQ(rec.kind, sur->kind());
  EXPECT_EQ(rec.flattening, sur->flattening());
  EXPECT_EQ(rec.theta, theta);
  EXPECT_THROW(output::save_theta_json(path, *sur, Vector::Zero(3)), InvalidArgument);
}

TEST(Output, ThetaBinaryRoundTrip) {
  const auto sur = surrogate::make_surrogate({"nn", 0, {5, 5}, surrogate::InitMode::ones}, 4, 9);
  Rng rng(4);
  const Vector theta = sur->initial(surrogate::InitMode::scaled_uniform, rng);
  const auto path = scratch("theta.bin");
  output::save_theta_binary(path, *sur, theta);
  const auto rec = output::load_theta_binary(path);
  EXPECT_EQ(rec.kind, "nn");
  EXPECT_EQ(rec.theta, theta);

  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "ONESHOTT");

  const auto bad = scratch("bad.bin");
  std::ofstream(bad, std::ios::binary) << "NOTATHETAFILE";
  EXPECT_THROW(output::load_theta_binary(bad), InvalidArgument);
  fs::resize_file(path, fs::file_size(path) - 4);
  EXPECT_THROW(output::load_theta_binary(path), InvalidArgument);
}

TEST(Output, CsvHeaders) {
  experiments::RateCurve curve;
  curve.fit.abscissae = {2, 4};
  curve.control_errors = {1.0, 0.5};
  curve.theta_errors = {0.1, 0.05};
  const auto rate = scratch("curve.csv");
  output::write_rate_csv(rate, curve);
  EXPECT_EQ(first_line(rate), "abscissa,squared_error_control,squared_error_theta");

  optim::PenaltyRun run;
  run.log.push_back({0, 0.1, 1.0, 2.0, std::numeric_limits<double>::quiet_NaN()});
  const auto log = scratch("log.csv");
  output::write_penalty_log(log, run);
  EXPECT_EQ(first_line(log), "k,beta,lambda,objective,distance");

  std::ifstream in(rate);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}
