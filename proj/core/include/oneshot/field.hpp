#pragma once

// Affine parametric diffusion coefficient
//   a(y, x) = a0 + sum_j y_j w_j sin(pi k_j x1) sin(pi l_j x2),
//   w_j = (pi^2 (k_j^2 + l_j^2) + tau^2)^(-theta_decay),
// evaluated at triangle centroids.

#include <utility>
#include <vector>

#include "oneshot/fem.hpp"
#include "oneshot/rng.hpp"
#include "oneshot/types.hpp"

namespace oneshot::field {

struct DiffusionField {
  int s = 0;
  /// Frequency pairs (k_j, l_j), ordered by k^2 + l^2 then lexicographically.
  std::vector<std::pair<int, int>> pairs;
  double theta_decay = 0.0;
  double tau = 0.0;
  std::vector<double> weights;
  double a0_shift = 1e-5;
  /// Constant mean value a0 = a0_shift + max over centroids of |sum_j psi_j|.
  double a0 = 0.0;
  /// psi_element[j][t] = w_j sin(pi k_j x1) sin(pi l_j x2) at centroid t.
  std::vector<std::vector<double>> psi_element;
  std::vector<double> a0_element;

  int n_triangles() const noexcept { return static_cast<int>(a0_element.size()); }
};

/// First `count` pairs of {1..count}^2 under the ordering above.
std::vector<std::pair<int, int>> frequency_pairs(int count);

DiffusionField build_field(const fem::Mesh& mesh, int s, double theta_decay, double tau);

/// Per-triangle coefficient values; throws EllipticityViolation on a
/// nonpositive value.
std::vector<double> diffusion_at(const DiffusionField& field, const ParamSample& y);

/// s independent uniform draws on [-1, 1].
ParamSample sample_y(Rng& rng, int s);

std::vector<ParamSample> sample_many(Rng& rng, int s, std::size_t count);

}  // namespace oneshot::field
