#pragma once

// Data misfit f, PDE residual penalty g and their gradients with respect to
// the joint variable x = (z, theta):
//   f(x, y) = 1/2 (u - u0)^T M (u - u0) + alpha/2 |z|^2_Z + theta_reg/2 |theta|^2
//   g(x, y) = |A(y) u - M z|^2,   u = u(theta, y)
// plus the reduced (PDE-eliminated) objective and its adjoint gradient.

#include <span>
#include <string_view>
#include <vector>

#include "oneshot/fem.hpp"
#include "oneshot/field.hpp"
#include "oneshot/surrogate.hpp"
#include "oneshot/types.hpp"

namespace oneshot::objective {

/// Norm on the control space: mass-weighted L2(D) or Euclidean on DOFs.
enum class ControlNorm { mass, euclidean };

ControlNorm parse_control_norm(std::string_view name);
std::string_view to_string(ControlNorm norm);

struct OptState {
  Vector z;
  Vector theta;

  double norm() const;
  Eigen::Index size() const noexcept { return z.size() + theta.size(); }
  /// [z; theta]
  Vector flat() const;
  static OptState from_flat(const Vector& flat, Eigen::Index n_control);
};

OptState operator+(const OptState& a, const OptState& b);
OptState operator-(const OptState& a, const OptState& b);
OptState operator*(double c, const OptState& a);

struct ProblemSpec {
  int n_div = 8;
  int s = 4;
  double theta_decay = 0.25;
  double tau = 3.0;
  double alpha = 0.5;
  double theta_reg = 0.0;
  ControlNorm control_norm = ControlNorm::mass;
  /// u0 solves the unit-coefficient problem with load scale * (x2^2 - x1^2).
  double target_scale = 100.0;
};

struct ProblemData {
  fem::Mesh mesh;
  fem::SparseOperator mass;
  field::DiffusionField field;
  /// Affine stiffness expansion A(y) = terms[0] + sum_j y_j terms[j + 1].
  std::vector<fem::SparseOperator> stiffness_terms;
  Vector u0;
  double alpha = 0.5;
  double theta_reg = 0.0;
  ControlNorm control_norm = ControlNorm::mass;

  int n_dof() const noexcept { return mesh.n_dof; }
  int s() const noexcept { return field.s; }

  /// A(y) assembled from diffusion_at(field, y); checks ellipticity.
  fem::SparseOperator stiffness_at(const ParamSample& y) const;
  /// A(y) v through the affine expansion.
  Vector apply_stiffness(const ParamSample& y, const Vector& v) const;
  /// Gram operator of the control norm applied to z (M z or z).
  Vector control_metric(const Vector& z) const;
  double control_energy(const Vector& z) const { return z.dot(control_metric(z)); }
};

ProblemData make_problem(const ProblemSpec& spec);

Vector target_state(const fem::Mesh& mesh, double scale);

double f_term(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
              const ParamSample& y);
double g_term(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
              const ParamSample& y);

struct SampleEvaluation {
  double f = 0.0;
  double g = 0.0;
  /// Gradient of f + lambda g.
  OptState gradient;
};

/// f, g and grad_x (f + lambda g) at one sample, sharing one surrogate pass.
SampleEvaluation evaluate_sample(const ProblemData& data, const surrogate::Surrogate& sur,
                                 const OptState& x, const ParamSample& y, double lambda);

OptState grad_x(const ProblemData& data, const surrogate::Surrogate& sur, const OptState& x,
                const ParamSample& y, double lambda);

struct BatchEvaluation {
  double value = 0.0;
  double mean_f = 0.0;
  double mean_g = 0.0;
  OptState gradient;
};

/// Sample mean of f + lambda g with its gradient; summation in sample order.
BatchEvaluation batch_objective(const ProblemData& data, const surrogate::Surrogate& sur,
                                const OptState& x, std::span<const ParamSample> samples,
                                double lambda);

struct ReducedEvaluation {
  double value = 0.0;
  Vector gradient;
};

/// Reduced objective mean 1/2 |u_i - u0|_M^2 + alpha/2 |z|_Z^2 with
/// u_i = A(y_i)^{-1} M z, and its adjoint-based gradient.
ReducedEvaluation reduced_gradient(const ProblemData& data, const Vector& z,
                                   std::span<const ParamSample> samples);

}  // namespace oneshot::objective
