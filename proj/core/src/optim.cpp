#include "oneshot/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "oneshot/error.hpp"
#include "oneshot/fem.hpp"

namespace oneshot::optim {

double PenaltySchedule::at(long k, double beta_k) const noexcept {
  switch (kind) {
    case Kind::constant:
      return lambda0;
    case Kind::linear:
      return lambda0 + slope * static_cast<double>(k);
    case Kind::adaptive:
      return std::max(lambda0, lambda_bar - std::sqrt(D * beta_k));
  }
  return lambda0;
}

StepSchedule::Kind parse_step_kind(std::string_view name) {
  if (name == "robbins_monro") return StepSchedule::Kind::robbins_monro;
  if (name == "constant") return StepSchedule::Kind::constant;
  throw InvalidArgument("unknown step schedule '" + std::string(name) + "'");
}

PenaltySchedule::Kind parse_penalty_kind(std::string_view name) {
  if (name == "constant") return PenaltySchedule::Kind::constant;
  if (name == "linear") return PenaltySchedule::Kind::linear;
  if (name == "adaptive") return PenaltySchedule::Kind::adaptive;
  throw InvalidArgument("unknown penalty schedule '" + std::string(name) + "'");
}

std::string_view to_string(StepSchedule::Kind kind) {
  return kind == StepSchedule::Kind::constant ? "constant" : "robbins_monro";
}

std::string_view to_string(PenaltySchedule::Kind kind) {
  switch (kind) {
    case PenaltySchedule::Kind::constant:
      return "constant";
    case PenaltySchedule::Kind::linear:
      return "linear";
    case PenaltySchedule::Kind::adaptive:
      return "adaptive";
  }
  return "constant";
}

UpdateRule parse_update_rule(std::string_view name) {
  if (name == "sgd") return UpdateRule::sgd;
  if (name == "adam") return UpdateRule::adam;
  throw InvalidArgument("unknown update rule '" + std::string(name) + "'");
}

std::string_view to_string(UpdateRule rule) { return rule == UpdateRule::adam ? "adam" : "sgd"; }

Sampler uniform_sampler(int s) {
  if (s < 1) throw InvalidArgument("uniform_sampler: dimension must be positive");
  return [s](Rng& rng) {
    ParamSample y(s);
    for (int j = 0; j < s; ++j) y[j] = rng.uniform_symmetric();
    return y;
  };
}

Sampler empirical_sampler(std::vector<ParamSample> samples) {
  if (samples.empty()) throw InvalidArgument("empirical_sampler: empty sample set");
  return [set = std::move(samples)](Rng& rng) { return set[rng.below(set.size())]; };
}

OptState project_ball(const OptState& x, double R) {
  if (!(R > 0.0)) throw InvalidArgument("project_ball: radius must be positive");
  const double n = x.norm();
  if (n <= R) return x;
  return (R / n) * x;
}

PenaltyRun psgd(const ProblemData& data, const surrogate::Surrogate& sur, OptState x0,
                const PsgdOptions& options, Rng& rng) {
  if (options.n_iter < 1) throw InvalidArgument("psgd: n_iter must be at least 1");
  if (options.radius && !(*options.radius > 0.0)) throw InvalidArgument("psgd: radius must be positive");
  if (options.log_stride < 1) throw InvalidArgument("psgd: log_stride must be at least 1");
  const Sampler sampler = options.sampler ? options.sampler : uniform_sampler(data.s());

  PenaltyRun run;
  run.seed = rng.seed();
  run.x = std::move(x0);
  run.log.reserve(static_cast<std::size_t>((options.n_iter + options.log_stride - 1) / options.log_stride));

  Vector m1;
  Vector m2;
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  if (options.rule == UpdateRule::adam) {
    m1 = Vector::Zero(run.x.size());
    m2 = Vector::Zero(run.x.size());
  }
  const Eigen::Index nz = run.x.z.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (long k = 0; k < options.n_iter; ++k) {
    const ParamSample y = sampler(rng);
    const double beta = options.steps.at(k);
    const double lambda = options.penalty.at(k, beta);
    const objective::SampleEvaluation e = objective::evaluate_sample(data, sur, run.x, y, lambda);
    if (!e.gradient.z.allFinite() || !e.gradient.theta.allFinite()) {
      throw Divergence("psgd: non-finite gradient at iteration " + std::to_string(k), k);
    }
    if (k % options.log_stride == 0) {
      const double dist = options.reference ? (run.x - *options.reference).norm() : nan;
      run.log.push_back({k, beta, lambda, e.f + lambda * e.g, dist});
    }

    if (options.rule == UpdateRule::sgd) {
      run.x.z.noalias() -= beta * e.gradient.z;
      run.x.theta.noalias() -= beta * e.gradient.theta;
    } else {
      const AdamParams& a = options.adam;
      b1_pow *= a.beta1;
      b2_pow *= a.beta2;
      const Vector g = e.gradient.flat();
      m1 = a.beta1 * m1 + (1.0 - a.beta1) * g;
      m2 = a.beta2 * m2 + (1.0 - a.beta2) * g.cwiseAbs2();
      const double c1 = 1.0 / (1.0 - b1_pow);
      const double c2 = 1.0 / (1.0 - b2_pow);
      const Vector step =
          (c1 * m1).array() / ((c2 * m2).array().sqrt() + a.epsilon);
      run.x.z.noalias() -= beta * step.head(nz);
      run.x.theta.noalias() -= beta * step.tail(step.size() - nz);
    }
    if (options.radius) run.x = project_ball(run.x, *options.radius);
    if (!run.x.z.allFinite() || !run.x.theta.allFinite()) {
      throw Divergence("psgd: non-finite iterate at iteration " + std::to_string(k), k);
    }
    if (options.checkpoint_every > 0 && options.on_checkpoint &&
        (k + 1) % options.checkpoint_every == 0) {
      options.on_checkpoint(k + 1, run.x, lambda);
    }
  }
  run.iterations = options.n_iter;
  return run;
}

MinimizeResult batch_minimize(const ProblemData& data, const surrogate::Surrogate& sur,
                              const OptState& x0, std::span<const ParamSample> samples,
                              double lambda, double tol, long max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("batch_minimize: tolerance must be positive");
  if (samples.empty()) throw InvalidArgument("batch_minimize: empty sample list");
  const Eigen::Index nz = x0.z.size();
  const Objective fun = [&](const Vector& flat, Vector& grad) {
    const auto e = objective::batch_objective(data, sur, OptState::from_flat(flat, nz), samples, lambda);
    grad = e.gradient.flat();
    return e.value;
  };
  LbfgsOptions opts;
  opts.gradient_tolerance = tol;
  opts.max_iterations = max_iter;
  LbfgsResult r;
  try {
    r = lbfgs_minimize(fun, x0.flat(), opts);
  } catch (const StalledMinimizer& e) {
    throw StalledMinimizer(std::string("batch_minimize: ") + e.what(), e.last_iterate());
  }
  MinimizeResult out;
  out.x = OptState::from_flat(r.x, nz);
  out.iterations = r.iterations;
  out.gradient_norm = r.gradient_norm;
  out.value = r.value;
  out.termination = r.termination;
  return out;
}

double PermQuadratic::value(const Vector& flat) const {
  return 0.5 * flat.dot(hessian * flat) - linear.dot(flat) + constant;
}

Vector PermQuadratic::gradient(const Vector& flat) const { return hessian * flat - linear; }

PermQuadratic assemble_perm_quadratic(const ProblemData& data,
                                      const surrogate::LinearSurrogate& sur,
                                      std::span<const ParamSample> samples, double lambda) {
  if (samples.empty()) throw InvalidArgument("linear_perm_oracle: empty sample list");
  if (sur.n_dof() != data.n_dof()) throw InvalidArgument("linear_perm_oracle: surrogate size mismatch");
  const Eigen::Index n = data.n_dof();
  const Eigen::Index p = sur.n_basis();
  const Eigen::Index s = data.s();
  const Eigen::Index d = n * p;
  const Eigen::Index terms = s + 1;
  const auto count = static_cast<Eigen::Index>(samples.size());

  // Row i holds yhat_j(i) * b(y_i) in block j, with yhat = (1, y).
  Matrix design(count, terms * p);
  for (Eigen::Index i = 0; i < count; ++i) {
    const ParamSample& y = samples[static_cast<std::size_t>(i)];
    if (y.size() != s) throw InvalidArgument("linear_perm_oracle: parameter dimension mismatch");
    const Vector b = sur.basis_values(y);
    design.block(i, 0, 1, p) = b.transpose();
    for (Eigen::Index j = 0; j < s; ++j) design.block(i, (j + 1) * p, 1, p) = y[j] * b.transpose();
  }
  const double inv = 1.0 / static_cast<double>(count);
  Matrix moments = Matrix::Zero(terms * p, terms * p);
  moments.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), inv);
  moments = moments.selfadjointView<Eigen::Lower>();
  const Vector mean_rows = inv * design.colwise().sum().transpose();

  const Matrix mass = data.mass.dense();
  std::vector<Matrix> t;
  t.reserve(static_cast<std::size_t>(terms));
  for (const auto& term : data.stiffness_terms) t.push_back(term.dense());

  PermQuadratic q;
  q.n_control = n;
  q.hessian = Matrix::Zero(n + d, n + d);
  auto h_zz = q.hessian.topLeftCorner(n, n);
  auto h_tt = q.hessian.bottomRightCorner(d, d);

  if (data.control_norm == objective::ControlNorm::mass) {
    h_zz = data.alpha * mass;
  } else {
    h_zz.diagonal().setConstant(data.alpha);
  }
  h_zz += 2.0 * lambda * mass * mass;

  const Matrix m00 = moments.topLeftCorner(p, p);
  for (Eigen::Index nu = 0; nu < p; ++nu) {
    for (Eigen::Index mu = 0; mu < p; ++mu) h_tt.block(nu * n, mu * n, n, n) = m00(nu, mu) * mass;
  }
  if (lambda != 0.0) {
    for (Eigen::Index j = 0; j < terms; ++j) {
      for (Eigen::Index k = 0; k < terms; ++k) {
        const Matrix tt = 2.0 * lambda * (t[static_cast<std::size_t>(j)] * t[static_cast<std::size_t>(k)]);
        const auto mom = moments.block(j * p, k * p, p, p);
        for (Eigen::Index nu = 0; nu < p; ++nu) {
          for (Eigen::Index mu = 0; mu < p; ++mu) h_tt.block(nu * n, mu * n, n, n) += mom(nu, mu) * tt;
        }
      }
    }
    auto h_tz = q.hessian.bottomLeftCorner(d, n);
    for (Eigen::Index j = 0; j < terms; ++j) {
      const Matrix tm = -2.0 * lambda * (t[static_cast<std::size_t>(j)] * mass);
      for (Eigen::Index nu = 0; nu < p; ++nu) h_tz.block(nu * n, 0, n, n) += mean_rows(j * p + nu) * tm;
    }
    q.hessian.topRightCorner(n, d) = h_tz.transpose();
  }
  h_tt.diagonal().array() += data.theta_reg;

  const Vector mu0 = mass * data.u0;
  q.linear = Vector::Zero(n + d);
  for (Eigen::Index nu = 0; nu < p; ++nu) q.linear.segment(n + nu * n, n) = mean_rows(nu) * mu0;
  q.constant = 0.5 * data.u0.dot(mu0);
  return q;
}

OptState linear_perm_oracle(const ProblemData& data, const surrogate::LinearSurrogate& sur,
                            std::span<const ParamSample> samples, double lambda) {
  const PermQuadratic q = assemble_perm_quadratic(data, sur, samples, lambda);
  const Eigen::LLT<Matrix> llt(q.hessian);
  if (llt.info() != Eigen::Success) {
    throw RankDeficiency("linear_perm_oracle: normal system is not positive definite");
  }
  const Vector pivots = Matrix(llt.matrixL()).diagonal().cwiseAbs2();
  const double scale = q.hessian.diagonal().cwiseAbs().maxCoeff();
  if (pivots.minCoeff() <= 1e-14 * scale) {
    throw RankDeficiency("linear_perm_oracle: normal system is numerically singular (pivot ratio " +
                         std::to_string(pivots.minCoeff() / scale) + ")");
  }
  Vector x = llt.solve(q.linear);
  for (int sweep = 0; sweep < 2; ++sweep) x += llt.solve(q.linear - q.hessian * x);
  const double residual = (q.hessian * x - q.linear).norm();
  if (residual > 1e-8 * (1.0 + q.linear.norm())) {
    throw RankDeficiency("linear_perm_oracle: optimality residual " + std::to_string(residual) +
                         " exceeds tolerance");
  }
  return OptState::from_flat(x, q.n_control);
}

Vector reduced_reference_solve(const ProblemData& data, std::span<const ParamSample> samples) {
  if (samples.empty()) throw InvalidArgument("reduced_reference_solve: empty sample list");
  if (!(data.alpha > 0.0)) throw InvalidArgument("reduced_reference_solve: alpha must be positive");
  std::deque<fem::SpdSolver> solvers;
  for (const auto& y : samples) solvers.emplace_back(data.stiffness_at(y));
  const double inv = 1.0 / static_cast<double>(samples.size());

  // mean_i M A_i^{-1} M A_i^{-1} v with v already multiplied by M.
  const auto reduced_map = [&](const Vector& mv) {
    Vector acc = Vector::Zero(mv.size());
    for (const auto& solver : solvers) acc += solver.solve(data.mass.apply(solver.solve(mv)));
    return Vector(data.mass.apply(inv * acc));
  };
  const auto apply_h = [&](const Vector& v) {
    return Vector(reduced_map(data.mass.apply(v)) + data.alpha * data.control_metric(v));
  };
  Vector rhs = Vector::Zero(data.n_dof());
  for (const auto& solver : solvers) rhs += solver.solve(data.mass.apply(data.u0));
  rhs = data.mass.apply(inv * rhs);

  Vector z = Vector::Zero(rhs.size());
  Vector r = rhs;
  Vector dir = r;
  double rr = r.squaredNorm();
  const double stop = std::max(1e-300, 1e-13 * rhs.norm());
  const long max_iter = 10 * rhs.size() + 100;
  for (long it = 0; it < max_iter && std::sqrt(rr) > stop; ++it) {
    const Vector hd = apply_h(dir);
    const double step = rr / dir.dot(hd);
    z.noalias() += step * dir;
    if ((it + 1) % 50 == 0) {
      r = rhs - apply_h(z);
    } else {
      r.noalias() -= step * hd;
    }
    const double rr_new = r.squaredNorm();
    dir = r + (rr_new / rr) * dir;
    rr = rr_new;
  }
  const double residual = (rhs - apply_h(z)).norm();
  if (residual > 1e-9) {
    throw SolverFailure("reduced_reference_solve: conjugate gradients did not converge", residual);
  }
  return z;
}

SpectralBounds spectral_bounds(const ProblemData& data, const surrogate::LinearSurrogate& sur,
                               const ParamSample& y) {
  SpectralBounds out;
  const Eigen::SelfAdjointEigenSolver<Matrix> a_eig(data.stiffness_at(y).dense(), Eigen::EigenvaluesOnly);
  out.a_max = a_eig.eigenvalues().cwiseAbs().maxCoeff();
  out.design = sur.basis_values(y).squaredNorm();
  const Eigen::SelfAdjointEigenSolver<Matrix> m_eig(data.mass.dense(), Eigen::EigenvaluesOnly);
  const double m_max = m_eig.eigenvalues().cwiseAbs().maxCoeff();
  out.control = m_max * m_max;
  return out;
}

}  // namespace oneshot::optim
