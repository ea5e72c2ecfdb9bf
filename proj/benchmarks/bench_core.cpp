#include <benchmark/benchmark.h>

#include "oneshot/experiments.hpp"
#include "oneshot/fem.hpp"
#include "oneshot/objective.hpp"
#include "oneshot/optim.hpp"

using namespace oneshot;

namespace {

objective::ProblemData problem(int n_div) {
  objective::ProblemSpec spec;
  spec.n_div = n_div;
  spec.theta_reg = 1e-5;
  return objective::make_problem(spec);
}

ParamSample fixed_sample() {
  ParamSample y(4);
  y << 0.3, -0.7, 0.1, 0.9;
  return y;
}

}  // namespace

static void BM_AssembleStiffness(benchmark::State& state) {
  const auto data = problem(static_cast<int>(state.range(0)));
  const auto y = fixed_sample();
  for (auto _ : state) benchmark::DoNotOptimize(data.stiffness_at(y));
}
BENCHMARK(BM_AssembleStiffness)->Arg(8)->Arg(32)->Arg(64);

static void BM_SolveSpd(benchmark::State& state) {
  const auto data = problem(static_cast<int>(state.range(0)));
  const auto a = data.stiffness_at(fixed_sample());
  for (auto _ : state) benchmark::DoNotOptimize(fem::solve_spd(a, data.u0));
}
BENCHMARK(BM_SolveSpd)->Arg(8)->Arg(32)->Arg(64);

static void BM_SurrogateEval(benchmark::State& state) {
  const auto sur = state.range(0) == 0
                       ? surrogate::make_surrogate({"nn", 0, {9, 9, 9}, surrogate::InitMode::ones}, 4, 49)
                       : surrogate::make_surrogate({"legendre", static_cast<int>(state.range(0)), {},
                                                    surrogate::InitMode::ones}, 4, 49);
  Rng rng(1);
  const Vector theta = sur->initial(surrogate::InitMode::scaled_uniform, rng);
  const auto y = fixed_sample();
  for (auto _ : state) benchmark::DoNotOptimize(sur->eval(theta, y));
}
BENCHMARK(BM_SurrogateEval)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

static void BM_SurrogateVjp(benchmark::State& state) {
  const auto sur = state.range(0) == 0
                       ? surrogate::make_surrogate({"nn", 0, {9, 9, 9}, surrogate::InitMode::ones}, 4, 49)
                       : surrogate::make_surrogate({"legendre", static_cast<int>(state.range(0)), {},
                                                    surrogate::InitMode::ones}, 4, 49);
  Rng rng(1);
  const Vector theta = sur->initial(surrogate::InitMode::scaled_uniform, rng);
  const Vector w = Vector::Ones(49);
  const auto y = fixed_sample();
  for (auto _ : state) benchmark::DoNotOptimize(sur->vjp(theta, y, w));
}
BENCHMARK(BM_SurrogateVjp)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

static void BM_EvaluateSample(benchmark::State& state) {
  const auto data = problem(8);
  const auto sur = surrogate::make_surrogate({"legendre", 2, {}, surrogate::InitMode::ones}, 4, 49);
  Rng rng(2);
  const optim::OptState x{Vector::Zero(49), sur->initial(surrogate::InitMode::scaled_uniform, rng)};
  const auto y = fixed_sample();
  for (auto _ : state) benchmark::DoNotOptimize(objective::evaluate_sample(data, *sur, x, y, 10.0));
}
BENCHMARK(BM_EvaluateSample);

static void BM_LinearPermOracle(benchmark::State& state) {
  const auto data = problem(8);
  const auto sur = surrogate::make_surrogate({"legendre", 2, {}, surrogate::InitMode::ones}, 4, 49);
  const auto& lin = dynamic_cast<const surrogate::LinearSurrogate&>(*sur);
  const auto samples = experiments::nested_samples(1, 4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(optim::linear_perm_oracle(data, lin, samples, 1.0));
}
BENCHMARK(BM_LinearPermOracle)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
