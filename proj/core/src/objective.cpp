#include "oneshot/objective.hpp"

#include <cmath>
#include <string>

#include "oneshot/error.hpp"

namespace oneshot::objective {

ControlNorm parse_control_norm(std::string_view name) {
  if (name == "mass") return ControlNorm::mass;
  if (name == "euclidean") return ControlNorm::euclidean;
  throw InvalidArgument("unknown control norm '" + std::string(name) + "'");
}

std::string_view to_string(ControlNorm norm) {
  return norm == ControlNorm::mass ? "mass" : "euclidean";
}

double OptState::norm() const { return std::sqrt(z.squaredNorm() + theta.squaredNorm()); }

Vector OptState::flat() const {
  Vector out(size());
  out << z, theta;
  return out;
}

OptState OptState::from_flat(const Vector& flat, Eigen::Index n_control) {
  if (n_control > flat.size()) throw InvalidArgument("OptState::from_flat: control size too large");
  return {flat.head(n_control), flat.tail(flat.size() - n_control)};
}

OptState operator+(const OptState& a, const OptState& b) { return {a.z + b.z, a.theta + b.theta}; }
OptState operator-(const OptState& a, const OptState& b) { return {a.z - b.z, a.theta - b.theta}; }
OptState operator*(double c, const OptState& a) { return {c * a.z, c * a.theta}; }

fem::SparseOperator ProblemData::stiffness_at(const ParamSample& y) const {
  return fem::assemble_stiffness(mesh, field::diffusion_at(field, y));
}

Vector ProblemData::apply_stiffness(const ParamSample& y, const Vector& v) const {
  if (y.size() != field.s) throw InvalidArgument("apply_stiffness: parameter dimension mismatch");
  Vector out = stiffness_terms[0].matrix() * v;
  for (int j = 0; j < field.s; ++j) {
    out.noalias() += y[j] * (stiffness_terms[static_cast<std::size_t>(j) + 1].matrix() * v);
  }
  return out;
}

Vector ProblemData::control_metric(const Vector& z) const {
  return control_norm == ControlNorm::mass ? mass.apply(z) : z;
}

Vector target_state(const fem::Mesh& mesh, double scale) {
  const std::vector<double> ones(static_cast<std::size_t>(mesh.n_triangles()), 1.0);
  const auto laplace = fem::assemble_stiffness(mesh, ones);
  const Vector load = fem::assemble_load(
      mesh, [scale](double x1, double x2) { return scale * (x2 * x2 - x1 * x1); });
  return fem::solve_spd(laplace, load);
}

ProblemData make_problem(const ProblemSpec& spec) {
  ProblemData data;
  data.mesh = fem::build_mesh(spec.n_div);
  data.mass = fem::assemble_mass(data.mesh);
  data.field = field::build_field(data.mesh, spec.s, spec.theta_decay, spec.tau);
  data.stiffness_terms.push_back(fem::assemble_stiffness(data.mesh, data.field.a0_element));
  for (const auto& psi : data.field.psi_element) {
    data.stiffness_terms.push_back(fem::assemble_stiffness_term(data.mesh, psi));
  }
  data.u0 = target_state(data.mesh, spec.target_scale);
  data.alpha = spec.alpha;
  data.theta_reg = spec.theta_reg;
  data.control_norm = spec.control_norm;
  return data;
}

namespace {

void check_dims(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x) {
  if (x.z.size() != data.n_dof()) throw InvalidArgument("objective: control length mismatch");
  if (static_cast<std::size_t>(x.theta.size()) != sur.param_count())
    throw InvalidArgument("objective: surrogate parameter length mismatch");
  if (sur.output_size() != data.n_dof()) throw InvalidArgument("objective: surrogate output size mismatch");
}

}  // namespace

double f_term(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
              const ParamSample& y) {
  check_dims(data, sur, x);
  const Vector diff = sur.eval(x.theta, y) - data.u0;
  return 0.5 * diff.dot(data.mass.apply(diff)) + 0.5 * data.alpha * data.control_energy(x.z) +
         0.5 * data.theta_reg * x.theta.squaredNorm();
}

double g_term(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
              const ParamSample& y) {
  check_dims(data, sur, x);
  const Vector u = sur.eval(x.theta, y);
  return (data.apply_stiffness(y, u) - data.mass.apply(x.z)).squaredNorm();
}

SampleEvaluation evaluate_sample(const ProblemData& data, const surrogate::Surrogate& sur,
                                 const OptState& x, const ParamSample& y, double lambda) {
  check_dims(data, sur, x);
  const Vector u = sur.eval(x.theta, y);
  const Vector diff = u - data.u0;
  const Vector m_diff = data.mass.apply(diff);
  const Vector mz = data.mass.apply(x.z);
  const Vector residual = data.apply_stiffness(y, u) - mz;
  const Vector metric_z = data.control_metric(x.z);

  SampleEvaluation out;
  out.f = 0.5 * diff.dot(m_diff) + 0.5 * data.alpha * x.z.dot(metric_z) +
          0.5 * data.theta_reg * x.theta.squaredNorm();
  out.g = residual.squaredNorm();

  // A(y) and M are symmetric.
  Vector w = m_diff;
  Vector z_grad = data.alpha * metric_z;
  if (lambda != 0.0) {
    w.noalias() += 2.0 * lambda * data.apply_stiffness(y, residual);
    z_grad.noalias() -= 2.0 * lambda * data.mass.apply(residual);
  }
  Vector theta_grad = sur.vjp(x.theta, y, w);
  if (data.theta_reg != 0.0) theta_grad.noalias() += data.theta_reg * x.theta;
  out.gradient = {std::move(z_grad), std::move(theta_grad)};
  return out;
}

OptState grad_x(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
                const ParamSample& y, double lambda) {
  return evaluate_sample(data, sur, x, y, lambda).gradient;
}

BatchEvaluation batch_objective(const ProblemData& data, const surrogate::Surrogate& sur,
                                const OptState& x, std::span<const ParamSample> samples,
                                double lambda) {
  if (samples.empty()) throw InvalidArgument("batch_objective: empty sample list");
  BatchEvaluation out;
  out.gradient = {Vector::Zero(x.z.size()), Vector::Zero(x.theta.size())};
  for (const auto& y : samples) {
    const SampleEvaluation e = evaluate_sample(data, sur, x, y, lambda);
    out.mean_f += e.f;
    out.mean_g += e.g;
    out.gradient.z += e.gradient.z;
    out.gradient.theta += e.gradient.theta;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  out.mean_f *= inv;
  out.mean_g *= inv;
  out.gradient.z *= inv;
  out.gradient.theta *= inv;
  out.value = out.mean_f + lambda * out.mean_g;
  return out;
}

ReducedEvaluation reduced_gradient(const ProblemData& data, const Vector& z,
                                   std::span<const ParamSample> samples) {
  if (samples.empty()) throw InvalidArgument("reduced_gradient: empty sample list");
  if (z.size() != data.n_dof()) throw InvalidArgument("reduced_gradient: control length mismatch");
  const Vector mz = data.mass.apply(z);
  Vector q_sum = Vector::Zero(z.size());
  double misfit = 0.0;
  for (const auto& y : samples) {
    const fem::SpdSolver solver(data.stiffness_at(y));
    const Vector u = solver.solve(mz);
    const Vector m_diff = data.mass.apply(u - data.u0);
    misfit += 0.5 * (u - data.u0).dot(m_diff);
    q_sum += solver.solve(m_diff);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  const Vector metric_z = data.control_metric(z);
  ReducedEvaluation out;
  out.value = inv * misfit + 0.5 * data.alpha * z.dot(metric_z);
  out.gradient = data.mass.apply(inv * q_sum) + data.alpha * metric_z;
  return out;
}

}  // namespace oneshot::objective
