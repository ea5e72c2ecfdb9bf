#pragma once

// Parametric state surrogates u(theta, y) with value and parameter
// vector-Jacobian products. Parameters are always passed as a flat vector;
// each implementation documents its flattening order.

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "oneshot/rng.hpp"
#include "oneshot/types.hpp"

namespace oneshot::surrogate {

enum class InitMode { ones, zeros, scaled_uniform };

class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual std::size_t param_count() const = 0;
  virtual int input_size() const = 0;
  virtual int output_size() const = 0;
  virtual std::string kind() const = 0;
  virtual std::string flattening() const = 0;

  virtual Vector eval(const Vector& theta, const ParamSample& y) const = 0;
  /// Gradient of <w, u(theta, y)> with respect to theta.
  virtual Vector vjp(const Vector& theta, const ParamSample& y, const Vector& w) const = 0;

  virtual Vector initial(InitMode mode, Rng& rng) const = 0;
};

/// Multi-indices nu in N_0^s with |nu| <= degree, sorted by |nu| and then
/// lexicographically (ascending). The zero index comes first.
struct MultiIndexSet {
  int s = 0;
  int degree = 0;
  std::vector<std::vector<int>> indices;

  std::size_t size() const noexcept { return indices.size(); }
};

MultiIndexSet gen_total_degree(int s, int degree);

/// (degree + s)! / (degree! s!)
std::size_t total_degree_cardinality(int s, int degree);

/// Legendre polynomial of degree k with unit second moment under dt/2 on
/// [-1, 1], i.e. sqrt(2k + 1) times the classical P_k.
double legendre_1d(int k, double t);

enum class BasisKind { legendre, monomial };

/// u(theta, y) = sum_nu theta_nu B_nu(y) with B_nu a tensorized Legendre or
/// monomial basis function. theta is an n_dof x n_basis matrix flattened
/// column-major: theta_flat[nu * n_dof + i] = theta(i, nu).
class LinearSurrogate final : public Surrogate {
 public:
  LinearSurrogate(MultiIndexSet basis, int n_dof, BasisKind kind = BasisKind::legendre);

  std::size_t param_count() const override { return basis_.size() * static_cast<std::size_t>(n_dof_); }
  int input_size() const override { return basis_.s; }
  int output_size() const override { return n_dof_; }
  std::string kind() const override;
  std::string flattening() const override;

  Vector eval(const Vector& theta, const ParamSample& y) const override;
  Vector vjp(const Vector& theta, const ParamSample& y, const Vector& w) const override;
  Vector initial(InitMode mode, Rng& rng) const override;

  /// Vector of basis function values (B_nu(y))_nu.
  Vector basis_values(const ParamSample& y) const;

  const MultiIndexSet& basis() const noexcept { return basis_; }
  BasisKind basis_kind() const noexcept { return kind_; }
  int n_dof() const noexcept { return n_dof_; }
  int n_basis() const noexcept { return static_cast<int>(basis_.size()); }

 private:
  MultiIndexSet basis_;
  int n_dof_;
  BasisKind kind_;
};

/// Feedforward network x_l = sigma(W_l x_{l-1} + b_l) with sigmoid hidden
/// layers and an affine output layer. Flattening: layer by layer, each
/// layer's weights (row-major, N_l x N_{l-1}) followed by its biases.
class NeuralSurrogate final : public Surrogate {
 public:
  explicit NeuralSurrogate(std::vector<int> layer_sizes);

  std::size_t param_count() const override { return param_count_; }
  int input_size() const override { return layers_.front(); }
  int output_size() const override { return layers_.back(); }
  std::string kind() const override { return "nn"; }
  std::string flattening() const override;

  Vector eval(const Vector& theta, const ParamSample& y) const override;
  Vector vjp(const Vector& theta, const ParamSample& y, const Vector& w) const override;
  /// scaled_uniform: weights uniform on [-r, r], r = sqrt(6 / (N_{l-1} + N_l)),
  /// biases zero.
  Vector initial(InitMode mode, Rng& rng) const override;

  const std::vector<int>& layer_sizes() const noexcept { return layers_; }
  /// Offset of W_l (l >= 1) in the flat vector; biases follow the weights.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer - 1]; }

 private:
  std::vector<int> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SurrogateSpec {
  std::string kind = "legendre";  // legendre | monomial | nn
  int degree = 2;
  std::vector<int> hidden = {9, 9, 9};
  InitMode init = InitMode::ones;
};

std::unique_ptr<Surrogate> make_surrogate(const SurrogateSpec& spec, int s, int n_dof);

InitMode parse_init_mode(std::string_view name);
std::string_view to_string(InitMode mode);

}  // namespace oneshot::surrogate
