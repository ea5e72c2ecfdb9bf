#include "oneshot/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "oneshot/error.hpp"

namespace oneshot::field {

std::vector<std::pair<int, int>> frequency_pairs(int count) {
  std::vector<std::pair<int, int>> all;
  for (int k = 1; k <= count; ++k)
    for (int l = 1; l <= count; ++l) all.emplace_back(k, l);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    const int na = a.first * a.first + a.second * a.second;
    const int nb = b.first * b.first + b.second * b.second;
    if (na != nb) return na < nb;
    return a < b;
  });
  all.resize(static_cast<std::size_t>(count));
  return all;
}

DiffusionField build_field(const fem::Mesh& mesh, int s, double theta_decay, double tau) {
  if (s < 1) throw InvalidArgument("build_field: s must be >= 1");
  if (!(theta_decay > 0.0)) throw InvalidArgument("build_field: theta_decay must be > 0");

  constexpr double pi = std::numbers::pi;
  DiffusionField field;
  field.s = s;
  field.theta_decay = theta_decay;
  field.tau = tau;
  field.pairs = frequency_pairs(s);
  const int n_tri = mesh.n_triangles();
  field.psi_element.assign(static_cast<std::size_t>(s),
                           std::vector<double>(static_cast<std::size_t>(n_tri)));
  for (int j = 0; j < s; ++j) {
    const auto [k, l] = field.pairs[static_cast<std::size_t>(j)];
    const double w = std::pow(pi * pi * (k * k + l * l) + tau * tau, -theta_decay);
    field.weights.push_back(w);
    for (int t = 0; t < n_tri; ++t) {
      const fem::Point c = mesh.centroid(t);
      field.psi_element[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] =
          w * std::sin(pi * k * c.x1) * std::sin(pi * l * c.x2);
    }
  }
  double sup = 0.0;
  for (int t = 0; t < n_tri; ++t) {
    double sum = 0.0;
    for (int j = 0; j < s; ++j)
      sum += field.psi_element[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
    sup = std::max(sup, std::abs(sum));
  }
  field.a0 = field.a0_shift + sup;
  field.a0_element.assign(static_cast<std::size_t>(n_tri), field.a0);
  return field;
}

std::vector<double> diffusion_at(const DiffusionField& field, const ParamSample& y) {
  if (y.size() != field.s) {
    throw InvalidArgument("diffusion_at: expected " + std::to_string(field.s) +
                          " parameters, got " + std::to_string(y.size()));
  }
  std::vector<double> a = field.a0_element;
  for (int j = 0; j < field.s; ++j) {
    const auto& psi = field.psi_element[static_cast<std::size_t>(j)];
    for (std::size_t t = 0; t < a.size(); ++t) a[t] += y[j] * psi[t];
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!(a[t] > 0.0)) {
      throw EllipticityViolation("diffusion_at: nonpositive coefficient " +
                                 std::to_string(a[t]) + " on triangle " + std::to_string(t));
    }
  }
  return a;
}

ParamSample sample_y(Rng& rng, int s) {
  ParamSample y(s);
  for (int j = 0; j < s; ++j) y[j] = rng.uniform_symmetric();
  return y;
}

std::vector<ParamSample> sample_many(Rng& rng, int s, std::size_t count) {
  std::vector<ParamSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_y(rng, s));
  return out;
}

}  // namespace oneshot::field
