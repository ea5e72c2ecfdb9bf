#include "oneshot/experiments.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "oneshot/error.hpp"
#include "oneshot/field.hpp"
#include "oneshot/surrogate.hpp"

namespace oneshot::experiments {

using config::ExperimentConfig;
using objective::OptState;
using objective::ProblemData;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const surrogate::LinearSurrogate& as_linear(const surrogate::Surrogate& sur) {
  const auto* linear = dynamic_cast<const surrogate::LinearSurrogate*>(&sur);
  if (linear == nullptr) throw InvalidArgument("the quadratic oracle needs a linear surrogate");
  return *linear;
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw InvalidArgument("geometric grid: bad range");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double ratio = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
  out.back() = hi;
  return out;
}

void check_exponents(const config::RateSettings& r) {
  if (r.k_min < 0 || r.k_max < r.k_min || r.k_ref < r.k_max || r.k_ref > 24) {
    throw InvalidArgument("rate study: need 0 <= k_min <= k_max <= k_ref <= 24");
  }
}

struct Comparison {
  std::vector<double> x;
  std::vector<double> control;
  std::vector<double> theta;
  std::vector<double> total;

  void add(double abscissa, const OptState& sol, const OptState& ref) {
    const double ez = (sol.z - ref.z).squaredNorm();
    const double et = (sol.theta - ref.theta).squaredNorm();
    x.push_back(abscissa);
    control.push_back(ez);
    theta.push_back(et);
    total.push_back(ez + et);
  }

  RateCurve finish(const Stopwatch& clock) const {
    RateCurve out;
    out.fit = fit_loglog_slope(x, total);
    out.control_errors = control;
    out.theta_errors = theta;
    out.wall_seconds = clock.seconds();
    return out;
  }
};

OptState solve_tagged(const ProblemData& data, const surrogate::Surrogate& sur,
                      std::span<const ParamSample> samples, double lambda,
                      const config::RateSettings& settings) {
  const std::string tag = " (N = " + std::to_string(samples.size()) + ", lambda = " + std::to_string(lambda) + ")";
  try {
    return solve_perm(data, sur, samples, lambda, settings);
  } catch (const StalledMinimizer& e) {
    throw StalledMinimizer(e.what() + tag, e.last_iterate());
  } catch (const RankDeficiency& e) {
    throw RankDeficiency(e.what() + tag);
  }
}

}  // namespace

RateFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_loglog_slope: length mismatch");
  if (x.size() < 4) throw InvalidArgument("fit_loglog_slope: at least 4 points are required");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgument("fit_loglog_slope: values must be finite and strictly positive");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_loglog_slope: abscissae must not all coincide");
  RateFit fit;
  fit.abscissae.assign(x.begin(), x.end());
  fit.squared_errors.assign(y.begin(), y.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::vector<ParamSample> nested_samples(std::uint64_t seed, int s, std::size_t count) {
  Rng rng(seed);
  return field::sample_many(rng, s, count);
}

OptState solve_perm(const ProblemData& data, const surrogate::Surrogate& sur,
                    std::span<const ParamSample> samples, double lambda,
                    const config::RateSettings& settings) {
  if (settings.solver == config::PermSolver::oracle) {
    return optim::linear_perm_oracle(data, as_linear(sur), samples, lambda);
  }
  Rng unused(0);
  const OptState x0{Vector::Zero(data.n_dof()), sur.initial(surrogate::InitMode::ones, unused)};
  return optim::batch_minimize(data, sur, x0, samples, lambda, settings.tol, settings.max_iter).x;
}

RateCurve run_rate_vs_N(const ExperimentConfig& cfg) {
  const Stopwatch clock;
  const auto& r = cfg.rate;
  check_exponents(r);
  const ProblemData data = objective::make_problem(cfg.problem);
  const auto sur = surrogate::make_surrogate(cfg.surrogate, data.s(), data.n_dof());
  const auto samples = nested_samples(cfg.seed, data.s(), std::size_t{1} << r.k_ref);
  const std::span<const ParamSample> all(samples);

  const OptState ref = solve_tagged(data, *sur, all, r.lambda, r);
  Comparison cmp;
  for (int k = r.k_min; k <= r.k_max; ++k) {
    const std::size_t n = std::size_t{1} << k;
    cmp.add(static_cast<double>(n), solve_tagged(data, *sur, all.first(n), r.lambda, r), ref);
  }
  return cmp.finish(clock);
}

RateCurve run_rate_vs_lambda(const ExperimentConfig& cfg) {
  const Stopwatch clock;
  const auto& r = cfg.rate;
  if (r.n_fixed < 1) throw InvalidArgument("rate study: n_fixed must be positive");
  const ProblemData data = objective::make_problem(cfg.problem);
  const auto sur = surrogate::make_surrogate(cfg.surrogate, data.s(), data.n_dof());
  const auto samples = nested_samples(cfg.seed, data.s(), static_cast<std::size_t>(r.n_fixed));

  const OptState ref = solve_tagged(data, *sur, samples, r.lambda_ref, r);
  Comparison cmp;
  for (double lambda : geometric_grid(r.lambda_min, r.lambda_max, r.lambda_points)) {
    cmp.add(lambda, solve_tagged(data, *sur, samples, lambda, r), ref);
  }
  return cmp.finish(clock);
}

RateCurve run_combined(const ExperimentConfig& cfg) {
  const Stopwatch clock;
  const auto& r = cfg.rate;
  check_exponents(r);
  const ProblemData data = objective::make_problem(cfg.problem);
  const auto sur = surrogate::make_surrogate(cfg.surrogate, data.s(), data.n_dof());
  const std::size_t n_ref = std::size_t{1} << r.k_ref;
  const auto samples = nested_samples(cfg.seed, data.s(), n_ref);
  const std::span<const ParamSample> all(samples);
  const auto penalty = [&](std::size_t n) { return std::pow(static_cast<double>(n), r.lambda_power); };

  const OptState ref = solve_tagged(data, *sur, all, penalty(n_ref), r);
  Comparison cmp;
  for (int k = r.k_min; k <= r.k_max; ++k) {
    const std::size_t n = std::size_t{1} << k;
    cmp.add(static_cast<double>(n), solve_tagged(data, *sur, all.first(n), penalty(n), r), ref);
  }
  return cmp.finish(clock);
}

surrogate::SurrogateSpec parse_surrogate_entry(const std::string& entry,
                                               const surrogate::SurrogateSpec& base) {
  surrogate::SurrogateSpec spec = base;
  const auto colon = entry.find(':');
  spec.kind = entry.substr(0, colon);
  if (spec.kind == "nn") {
    if (colon != std::string::npos) throw InvalidArgument("surrogate entry 'nn' takes no degree");
    return spec;
  }
  if (spec.kind != "legendre" && spec.kind != "monomial") {
    throw InvalidArgument("unknown surrogate entry '" + entry + "'");
  }
  if (colon == std::string::npos) throw InvalidArgument("surrogate entry '" + entry + "' needs a degree");
  try {
    spec.degree = std::stoi(entry.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("surrogate entry '" + entry + "' has a malformed degree");
  }
  return spec;
}

SgdComparison run_sgd_vs_reference(const ExperimentConfig& cfg) {
  const Stopwatch clock;
  const auto& g = cfg.sgd;
  if (g.n_iter < 1 || g.checkpoints < 1 || g.n_reference < 1 || g.n_heldout < 1) {
    throw InvalidArgument("sgd study: iteration, checkpoint and sample counts must be positive");
  }
  const ProblemData data = objective::make_problem(cfg.problem);

  Rng ref_rng = Rng::stream(cfg.seed, 0);
  const auto ref_samples = field::sample_many(ref_rng, data.s(), static_cast<std::size_t>(g.n_reference));
  Rng held_rng = Rng::stream(cfg.seed, 1);
  const auto heldout = field::sample_many(held_rng, data.s(), static_cast<std::size_t>(g.n_heldout));

  SgdComparison out;
  out.z_ref = optim::reduced_reference_solve(data, ref_samples);
  const Vector m_zref = data.mass.apply(out.z_ref);
  std::vector<Vector> u_ref;
  u_ref.reserve(heldout.size());
  for (const auto& y : heldout) u_ref.push_back(fem::solve_spd(data.stiffness_at(y), m_zref));

  const double inv = 1.0 / static_cast<double>(heldout.size());
  const auto measure = [&](const surrogate::Surrogate& sur, long k, const OptState& x, double lambda) {
    SgdCheckpoint c;
    c.iteration = k;
    c.lambda = lambda;
    c.control_error = (x.z - out.z_ref).squaredNorm();
    const Vector mz = data.mass.apply(x.z);
    for (std::size_t i = 0; i < heldout.size(); ++i) {
      const Vector u = sur.eval(x.theta, heldout[i]);
      c.state_error += inv * (u - u_ref[i]).squaredNorm();
      c.residual += inv * (data.apply_stiffness(heldout[i], u) - mz).squaredNorm();
      c.target_misfit += inv * (u - data.u0).squaredNorm();
    }
    return c;
  };

  const long every = std::max<long>(1, g.n_iter / g.checkpoints);
  for (std::size_t i = 0; i < g.surrogates.size(); ++i) {
    const auto spec = parse_surrogate_entry(g.surrogates[i], cfg.surrogate);
    const auto sur = surrogate::make_surrogate(spec, data.s(), data.n_dof());
    Rng init_rng = Rng::stream(cfg.seed, 100 + i);
    const OptState x0{Vector::Zero(data.n_dof()), sur->initial(spec.kind == "nn" ? g.init_nn : g.init_linear, init_rng)};

    SgdTrace trace;
    trace.label = g.surrogates[i];
    trace.param_count = sur->param_count();
    trace.checkpoints.push_back(measure(*sur, 0, x0, g.penalty.at(0, g.steps.at(0))));

    optim::PsgdOptions opts;
    opts.steps = g.steps;
    opts.penalty = g.penalty;
    opts.n_iter = g.n_iter;
    if (g.radius > 0.0) opts.radius = g.radius;
    opts.rule = g.rule;
    opts.log_stride = g.log_stride;
    opts.checkpoint_every = every;
    opts.on_checkpoint = [&](long k, const OptState& x, double lambda) {
      trace.checkpoints.push_back(measure(*sur, k, x, lambda));
    };
    Rng run_rng = Rng::stream(cfg.seed, 200 + i);
    try {
      trace.run = optim::psgd(data, *sur, x0, opts, run_rng);
    } catch (const Divergence& e) {
      throw Divergence(std::string(e.what()) + " [surrogate " + trace.label + "]", e.iteration());
    }
    if (trace.checkpoints.back().iteration != g.n_iter) {
      trace.checkpoints.push_back(measure(*sur, g.n_iter, trace.run.x, g.penalty.at(g.n_iter - 1, g.steps.at(g.n_iter - 1))));
    }
    out.traces.push_back(std::move(trace));
  }
  out.wall_seconds = clock.seconds();
  return out;
}

Welford::Welford(Eigen::Index dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

void Welford::add(const Vector& x) {
  if (x.size() != mean_.size()) throw InvalidArgument("Welford::add: dimension mismatch");
  ++count_;
  const Vector delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.array() += delta.array() * (x - mean_).array();
}

void Welford::merge(const Welford& other) {
  if (other.mean_.size() != mean_.size()) throw InvalidArgument("Welford::merge: dimension mismatch");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const auto na = static_cast<double>(count_);
  const auto nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Vector delta = other.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / n);
  count_ += other.count_;
}

Vector Welford::variance() const {
  if (count_ < 2) return Vector::Zero(mean_.size());
  return m2_ / static_cast<double>(count_ - 1);
}

McStats monte_carlo_state_stats(const ExperimentConfig& cfg, const optim::Sampler& sampler, Rng& rng) {
  const Stopwatch clock;
  if (cfg.mc.samples < 1) throw InvalidArgument("mc-stats: sample count must be positive");
  const ProblemData data = objective::make_problem(cfg.problem);
  const double scale = cfg.mc.load_scale;
  const Vector load = fem::assemble_load(
      data.mesh, [scale](double x1, double x2) { return scale * (x2 * x2 - x1 * x1); });
  Welford acc(data.n_dof());
  for (long i = 0; i < cfg.mc.samples; ++i) acc.add(fem::solve_spd(data.stiffness_at(sampler(rng)), load));
  McStats out;
  out.mesh = data.mesh;
  out.mean = acc.mean();
  out.stddev = acc.variance().cwiseSqrt();
  out.samples = acc.count();
  out.wall_seconds = clock.seconds();
  return out;
}

McStats monte_carlo_state_stats(const ExperimentConfig& cfg) {
  Rng rng(cfg.seed);
  return monte_carlo_state_stats(cfg, optim::uniform_sampler(cfg.problem.s), rng);
}

}  // namespace oneshot::experiments
