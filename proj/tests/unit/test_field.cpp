#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oneshot/error.hpp"
#include "oneshot/field.hpp"

using namespace oneshot;
using namespace oneshot::field;

TEST(Field, FrequencyPairOrdering) {
  const auto pairs = frequency_pairs(4);
  const std::vector<std::pair<int, int>> expected{{1, 1}, {1, 2}, {2, 1}, {2, 2}};
  EXPECT_EQ(pairs, expected);
  const auto more = frequency_pairs(6);
  EXPECT_EQ(more[4], (std::pair<int, int>{1, 3}));
  EXPECT_EQ(more[5], (std::pair<int, int>{3, 1}));
}

TEST(Field, WeightsFollowDecayFormula) {
  const auto mesh = fem::build_mesh(8);
  const auto f = build_field(mesh, 4, 0.25, 3.0);
  const double pi = std::numbers::pi;
  EXPECT_NEAR(f.weights[0], std::pow(2.0 * pi * pi + 9.0, -0.25), 1e-15);
  EXPECT_NEAR(f.weights[3], std::pow(8.0 * pi * pi + 9.0, -0.25), 1e-15);
  for (std::size_t j = 0; j + 1 < f.weights.size(); ++j) EXPECT_GE(f.weights[j], f.weights[j + 1]);
}

TEST(Field, ShiftDominatesPerturbationAtCentroids) {
  const auto mesh = fem::build_mesh(8);
  const auto f = build_field(mesh, 4, 0.25, 3.0);
  double sup = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += f.psi_element[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
    sup = std::max(sup, std::abs(sum));
  }
  EXPECT_NEAR(f.a0, 1e-5 + sup, 1e-15);
  for (double v : f.a0_element) EXPECT_EQ(v, f.a0);
}

TEST(Field, AffineInParameter) {
  const auto mesh = fem::build_mesh(8);
  const auto f = build_field(mesh, 4, 0.25, 3.0);
  const auto at_zero = diffusion_at(f, ParamSample::Zero(4));
  for (std::size_t t = 0; t < at_zero.size(); ++t) EXPECT_EQ(at_zero[t], f.a0_element[t]);
  ParamSample y(4);
  y << 0.3, -0.7, 0.1, 0.5;
  const auto plus = diffusion_at(f, y);
  const auto minus = diffusion_at(f, ParamSample(-y));
  for (std::size_t t = 0; t < plus.size(); ++t) EXPECT_NEAR(plus[t] + minus[t], 2.0 * f.a0_element[t], 1e-14);
}

TEST(Field, AllOnesCornerIsElliptic) {
  const auto mesh = fem::build_mesh(8);
  const auto f = build_field(mesh, 4, 0.25, 3.0);
  const auto a = diffusion_at(f, ParamSample::Ones(4));
  EXPECT_GT(*std::min_element(a.begin(), a.end()), 1e-5 * (1.0 - 1e-9));
}

TEST(Field, DimensionMismatchIsRejected) {
  const auto mesh = fem::build_mesh(4);
  const auto f = build_field(mesh, 3, 0.25, 3.0);
  EXPECT_THROW(diffusion_at(f, ParamSample::Zero(2)), InvalidArgument);
  EXPECT_THROW(build_field(mesh, 0, 0.25, 3.0), InvalidArgument);
}

TEST(Sampling, ReproducibleAndDistinct) {
  Rng a(42);
  Rng b(42);
  const auto y1 = sample_y(a, 4);
  const auto y2 = sample_y(a, 4);
  EXPECT_NE(y1, y2);
  EXPECT_EQ(y1, sample_y(b, 4));
  EXPECT_EQ(y2, sample_y(b, 4));
}

TEST(Sampling, UniformMoments) {
  Rng rng(7);
  const auto ys = sample_many(rng, 4, 100000);
  for (int j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (const auto& y : ys) {
      EXPECT_GE(y[j], -1.0);
      EXPECT_LT(y[j], 1.0);
      mean += y[j];
    }
    mean /= static_cast<double>(ys.size());
    double var = 0.0;
    for (const auto& y : ys) var += (y[j] - mean) * (y[j] - mean);
    var /= static_cast<double>(ys.size() - 1);
    EXPECT_LT(std::abs(mean), 0.01);
    EXPECT_NEAR(var, 1.0 / 3.0, 0.05 / 3.0);
  }
}
