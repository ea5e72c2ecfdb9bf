#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oneshot/error.hpp"
#include "oneshot/experiments.hpp"

using namespace oneshot;
using namespace oneshot::experiments;

namespace {

config::ExperimentConfig small_rate_config() {
  auto cfg = config::default_config(config::ExperimentId::rate_n);
  cfg.problem.n_div = 4;
  cfg.surrogate.degree = 1;
  cfg.rate.k_min = 1;
  cfg.rate.k_max = 6;
  cfg.rate.k_ref = 8;
  return cfg;
}

}  // namespace

TEST(LogLogFit, ExactPowerLaw) {
  std::vector<double> x, y;
  for (int k = 1; k <= 10; ++k) {
    x.push_back(std::ldexp(1.0, k));
    y.push_back(3.0 * std::pow(x.back(), -2.0));
  }
  const auto fit = fit_loglog_slope(x, y);
  EXPECT_NEAR(fit.slope, -2.0, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.0, 1e-11);
  EXPECT_LT(fit.residual, 1e-12);
}

TEST(LogLogFit, ConstantHasZeroSlope) {
  const std::vector<double> x{1, 2, 4, 8, 16};
  const std::vector<double> y(5, 0.7);
  EXPECT_NEAR(fit_loglog_slope(x, y).slope, 0.0, 1e-14);
}

TEST(LogLogFit, MultiplicativeNoise) {
  Rng rng(2024);
  std::vector<double> x, y;
  for (int k = 0; k < 14; ++k) {
    x.push_back(std::ldexp(1.0, k));
    y.push_back(std::pow(x.back(), -1.0) * std::exp(0.1 * rng.uniform_symmetric()));
  }
  const double slope = fit_loglog_slope(x, y).slope;
  EXPECT_GE(slope, -1.05);
  EXPECT_LE(slope, -0.95);
}

TEST(LogLogFit, RejectsDegenerateInput) {
  const std::vector<double> three{1, 2, 3};
  EXPECT_THROW(fit_loglog_slope(three, three), InvalidArgument);
  const std::vector<double> x{1, 2, 4, 8};
  EXPECT_THROW(fit_loglog_slope(x, std::vector<double>{1, 0, 1, 1}), InvalidArgument);
  EXPECT_THROW(fit_loglog_slope(x, std::vector<double>{1, -1, 1, 1}), InvalidArgument);
  EXPECT_THROW(fit_loglog_slope(x, std::vector<double>{1, NAN, 1, 1}), InvalidArgument);
  EXPECT_THROW(fit_loglog_slope(std::vector<double>(4, 2.0), x), InvalidArgument);
}

TEST(NestedSamples, PrefixProperty) {
  const auto big = nested_samples(9, 3, 64);
  const auto small = nested_samples(9, 3, 16);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i], big[i]);
}

TEST(RateStudy, ReproducibleAndSolverConsistent) {
  auto cfg = small_rate_config();
  const auto a = run_rate_vs_N(cfg);
  const auto b = run_rate_vs_N(cfg);
  ASSERT_EQ(a.control_errors.size(), 6u);
  EXPECT_EQ(a.control_errors, b.control_errors);
  EXPECT_EQ(a.theta_errors, b.theta_errors);
  EXPECT_EQ(a.fit.slope, b.fit.slope);
  for (std::size_t i = 0; i < a.fit.abscissae.size(); ++i) {
    EXPECT_EQ(a.fit.abscissae[i], std::ldexp(1.0, static_cast<int>(i) + 1));
  }
  cfg.rate.solver = config::PermSolver::lbfgs;
  cfg.rate.tol = 1e-12;
  const auto c = run_rate_vs_N(cfg);
  for (std::size_t i = 0; i < a.control_errors.size(); ++i) {
    const double total = a.control_errors[i] + a.theta_errors[i];
    EXPECT_NEAR(c.control_errors[i] + c.theta_errors[i], total, 1e-4 * total);
  }
}

TEST(RateStudy, RejectsBadExponents) {
  auto cfg = small_rate_config();
  cfg.rate.k_ref = 5;
  EXPECT_THROW(run_rate_vs_N(cfg), InvalidArgument);
}

TEST(SurrogateEntries, Parsing) {
  const surrogate::SurrogateSpec base;
  EXPECT_EQ(parse_surrogate_entry("legendre:3", base).degree, 3);
  EXPECT_EQ(parse_surrogate_entry("monomial:2", base).kind, "monomial");
  EXPECT_EQ(parse_surrogate_entry("nn", base).kind, "nn");
  EXPECT_THROW(parse_surrogate_entry("legendre", base), InvalidArgument);
  EXPECT_THROW(parse_surrogate_entry("legendre:x", base), InvalidArgument);
  EXPECT_THROW(parse_surrogate_entry("nn:2", base), InvalidArgument);
  EXPECT_THROW(parse_surrogate_entry("spline:1", base), InvalidArgument);
}

TEST(Welford, MatchesTwoPassAndMerges) {
  Rng rng(6);
  std::vector<Vector> data;
  for (int i = 0; i < 500; ++i) {
    Vector v(3);
    v << 1e3 + rng.uniform01(), rng.uniform_symmetric(), 2.0;
    data.push_back(v);
  }
  Welford all(3), left(3), right(3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    all.add(data[i]);
    (i < 173 ? left : right).add(data[i]);
  }
  Vector mean = Vector::Zero(3);
  for (const auto& v : data) mean += v / 500.0;
  Vector var = Vector::Zero(3);
  for (const auto& v : data) var += (v - mean).cwiseAbs2() / 499.0;
  EXPECT_LT((all.mean() - mean).norm(), 1e-12 * mean.norm());
  EXPECT_LT((all.variance() - var).norm(), 1e-10 * var.norm());
  EXPECT_EQ(all.variance()[2], 0.0);
  left.merge(right);
  EXPECT_EQ(left.count(), 500);
  EXPECT_LT((left.mean() - all.mean()).norm(), 1e-12 * mean.norm());
  EXPECT_LT((left.variance() - all.variance()).norm(), 1e-12 * var.norm());
  EXPECT_THROW(all.add(Vector::Zero(2)), InvalidArgument);
}

TEST(MonteCarlo, DegenerateSamplerHasNoSpread) {
  auto cfg = config::default_config(config::ExperimentId::mc_stats);
  cfg.problem.n_div = 6;
  cfg.mc.samples = 50;
  const optim::Sampler fixed = [](Rng&) { return ParamSample(Vector::Zero(4)); };
  Rng rng(1);
  const auto stats = monte_carlo_state_stats(cfg, fixed, rng);
  EXPECT_EQ(stats.samples, 50);
  EXPECT_LT(stats.stddev.cwiseAbs().maxCoeff(), 1e-15 * stats.mean.cwiseAbs().maxCoeff());
  EXPECT_GT(stats.mean.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MonteCarlo, IndependentSeedsAgreeWithinClt) {
  auto cfg = config::default_config(config::ExperimentId::mc_stats);
  cfg.mc.samples = 2000;
  cfg.seed = 1;
  const auto a = monte_carlo_state_stats(cfg);
  cfg.seed = 2;
  const auto b = monte_carlo_state_stats(cfg);
  ASSERT_EQ(a.mean.size(), b.mean.size());
  const double n = static_cast<double>(cfg.mc.samples);
  int outside = 0;
  for (Eigen::Index i = 0; i < a.mean.size(); ++i) {
    const double se = std::sqrt((a.stddev[i] * a.stddev[i] + b.stddev[i] * b.stddev[i]) / n);
    if (std::abs(a.mean[i] - b.mean[i]) > 4.0 * se + 1e-300) ++outside;
  }
  EXPECT_EQ(outside, 0);
  // Same seed reproduces bit for bit.
  const auto c = monte_carlo_state_stats(cfg);
  EXPECT_EQ(b.mean, c.mean);
  EXPECT_EQ(b.stddev, c.stddev);
}

TEST(SgdStudy, ShortRunStructure) {
  auto cfg = config::default_config(config::ExperimentId::sgd_compare);
  cfg.sgd.n_iter = 2000;
  cfg.sgd.checkpoints = 4;
  cfg.sgd.n_reference = 64;
  cfg.sgd.n_heldout = 20;
  cfg.sgd.log_stride = 100;
  const auto cmp = run_sgd_vs_reference(cfg);
  ASSERT_EQ(cmp.traces.size(), 4u);
  const std::size_t counts[] = {245, 735, 1715, 715};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& t = cmp.traces[i];
    EXPECT_EQ(t.param_count, counts[i]);
    ASSERT_EQ(t.checkpoints.size(), 5u);
    EXPECT_EQ(t.checkpoints.front().iteration, 0);
    EXPECT_EQ(t.checkpoints.back().iteration, 2000);
    EXPECT_EQ(t.checkpoints.front().control_error, cmp.z_ref.squaredNorm());
    for (const auto& c : t.checkpoints) {
      EXPECT_TRUE(std::isfinite(c.control_error) && std::isfinite(c.state_error) && std::isfinite(c.residual) &&
                  std::isfinite(c.target_misfit));
    }
    EXPECT_EQ(t.run.log.size(), 20u);
  }
  const auto again = run_sgd_vs_reference(cfg);
  EXPECT_EQ(again.traces[3].run.x.theta, cmp.traces[3].run.x.theta);
}
