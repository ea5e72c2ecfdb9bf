#include "oneshot/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oneshot/error.hpp"

namespace oneshot::fem {

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Point& a = nodes[static_cast<std::size_t>(tri[0])];
  const Point& b = nodes[static_cast<std::size_t>(tri[1])];
  const Point& c = nodes[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2));
}

Point Mesh::centroid(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  Point p;
  for (int v : tri) {
    p.x1 += nodes[static_cast<std::size_t>(v)].x1 / 3.0;
    p.x2 += nodes[static_cast<std::size_t>(v)].x2 / 3.0;
  }
  return p;
}

Mesh build_mesh(int n_div) {
  if (n_div < 2) {
    throw InvalidArgument("build_mesh: n_div must be >= 2, got " +
                          std::to_string(n_div));
  }
  Mesh mesh;
  mesh.n_div = n_div;
  mesh.h = 1.0 / n_div;
  const int side = n_div + 1;
  mesh.nodes.reserve(static_cast<std::size_t>(side * side));
  mesh.interior_map.assign(static_cast<std::size_t>(side * side), -1);
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      mesh.nodes.push_back({i * mesh.h, j * mesh.h});
      if (i > 0 && i < n_div && j > 0 && j < n_div) {
        mesh.interior_map[static_cast<std::size_t>(j * side + i)] = mesh.n_dof++;
        mesh.dof_nodes.push_back(j * side + i);
      }
    }
  }
  mesh.triangles.reserve(static_cast<std::size_t>(2 * n_div * n_div));
  for (int j = 0; j < n_div; ++j) {
    for (int i = 0; i < n_div; ++i) {
      const int ll = j * side + i;
      const int lr = ll + 1;
      const int ur = ll + side + 1;
      const int ul = ll + side;
      mesh.triangles.push_back({ll, lr, ur});
      mesh.triangles.push_back({ll, ur, ul});
    }
  }
  return mesh;
}

std::vector<SparseOperator::Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(m_.nonZeros()));
  for (int k = 0; k < m_.outerSize(); ++k) {
    for (Storage::InnerIterator it(m_, k); it; ++it) {
      out.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return out;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

template <typename Local>
SparseOperator assemble(const Mesh& mesh, Local&& local) {
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const auto k = local(t);
    for (int p = 0; p < 3; ++p) {
      const int row = mesh.interior_map[static_cast<std::size_t>(tri[p])];
      if (row < 0) continue;
      for (int q = 0; q < 3; ++q) {
        const int col = mesh.interior_map[static_cast<std::size_t>(tri[q])];
        if (col < 0) continue;
        triplets.emplace_back(row, col, k[p][q]);
      }
    }
  }
  SparseOperator::Storage m(mesh.n_dof, mesh.n_dof);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return SparseOperator(std::move(m));
}

using Local3 = std::array<std::array<double, 3>, 3>;

}  // namespace

SparseOperator assemble_stiffness(const Mesh& mesh, std::span<const double> coeff) {
  if (coeff.size() != mesh.triangles.size()) {
    throw InvalidArgument("assemble_stiffness: expected one coefficient per triangle");
  }
  for (std::size_t t = 0; t < coeff.size(); ++t) {
    if (!(coeff[t] > 0.0)) {
      throw EllipticityViolation("assemble_stiffness: coefficient " +
                                 std::to_string(coeff[t]) + " on triangle " +
                                 std::to_string(t) + " is not positive");
    }
  }
  return assemble_stiffness_term(mesh, coeff);
}

SparseOperator assemble_stiffness_term(const Mesh& mesh, std::span<const double> coeff) {
  if (coeff.size() != mesh.triangles.size()) {
    throw InvalidArgument("assemble_stiffness: expected one coefficient per triangle");
  }
  return assemble(mesh, [&](int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Point& a = mesh.nodes[static_cast<std::size_t>(tri[0])];
    const Point& b = mesh.nodes[static_cast<std::size_t>(tri[1])];
    const Point& c = mesh.nodes[static_cast<std::size_t>(tri[2])];
    // Barycentric gradients scaled by twice the area.
    const std::array<double, 3> gx{b.x2 - c.x2, c.x2 - a.x2, a.x2 - b.x2};
    const std::array<double, 3> gy{c.x1 - b.x1, a.x1 - c.x1, b.x1 - a.x1};
    const double area = mesh.signed_area(t);
    const double scale = coeff[static_cast<std::size_t>(t)] / (4.0 * area);
    Local3 k{};
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) k[p][q] = scale * (gx[p] * gx[q] + gy[p] * gy[q]);
    return k;
  });
}

SparseOperator assemble_mass(const Mesh& mesh) {
  return assemble(mesh, [&](int t) {
    const double w = mesh.signed_area(t) / 12.0;
    Local3 k{};
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) k[p][q] = (p == q ? 2.0 : 1.0) * w;
    return k;
  });
}

Vector assemble_load(const Mesh& mesh, const std::function<double(double, double)>& f) {
  Vector b = Vector::Zero(mesh.n_dof);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const Point c = mesh.centroid(t);
    const double contrib = f(c.x1, c.x2) * mesh.signed_area(t) / 3.0;
    for (int v : mesh.triangles[static_cast<std::size_t>(t)]) {
      const int dof = mesh.interior_map[static_cast<std::size_t>(v)];
      if (dof >= 0) b[dof] += contrib;
    }
  }
  return b;
}

SpdSolver::SpdSolver(const SparseOperator& a) : a_(a.matrix()) {
  llt_.compute(a_);
  if (llt_.info() != Eigen::Success) {
    throw SolverFailure("solve_spd: Cholesky factorization failed (operator not SPD)",
                        std::numeric_limits<double>::infinity());
  }
}

Vector SpdSolver::solve(const Vector& b) const {
  if (b.size() != a_.rows()) {
    throw InvalidArgument("solve_spd: dimension mismatch");
  }
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(b.size());
  Vector v = llt_.solve(b);
  double rel = (a_ * v - b).norm() / bnorm;
  // One refinement sweep recovers the last digits on badly scaled systems.
  for (int sweep = 0; sweep < 2 && rel > kSolveTolerance; ++sweep) {
    v += llt_.solve(b - a_ * v);
    rel = (a_ * v - b).norm() / bnorm;
  }
  if (!(rel <= kSolveTolerance)) {
    throw SolverFailure("solve_spd: relative residual " + std::to_string(rel) +
                            " above tolerance",
                        rel);
  }
  return v;
}

Vector solve_spd(const SparseOperator& a, const Vector& b) {
  return SpdSolver(a).solve(b);
}

namespace {

struct QuadPoint {
  double l0, l1, l2, w;
};

// Seven-point rule, exact for polynomials of degree 5; weights sum to one.
const std::array<QuadPoint, 7>& degree5_rule() {
  static const std::array<QuadPoint, 7> rule = [] {
    const double r = std::sqrt(15.0);
    const double a1 = (6.0 - r) / 21.0;
    const double a2 = (6.0 + r) / 21.0;
    const double w1 = (155.0 - r) / 1200.0;
    const double w2 = (155.0 + r) / 1200.0;
    return std::array<QuadPoint, 7>{{
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0},
        {a1, a1, 1.0 - 2.0 * a1, w1},
        {a1, 1.0 - 2.0 * a1, a1, w1},
        {1.0 - 2.0 * a1, a1, a1, w1},
        {a2, a2, 1.0 - 2.0 * a2, w2},
        {a2, 1.0 - 2.0 * a2, a2, w2},
        {1.0 - 2.0 * a2, a2, a2, w2},
    }};
  }();
  return rule;
}

double nodal(const Mesh& mesh, const Vector& u, int node) {
  const int dof = mesh.interior_map[static_cast<std::size_t>(node)];
  return dof < 0 ? 0.0 : u[dof];
}

}  // namespace

double l2_error(const Mesh& mesh, const Vector& u_h,
                const std::function<double(double, double)>& exact) {
  double sum = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const double area = mesh.signed_area(t);
    std::array<double, 3> uv{};
    for (int p = 0; p < 3; ++p) uv[p] = nodal(mesh, u_h, tri[p]);
    const Point& a = mesh.nodes[static_cast<std::size_t>(tri[0])];
    const Point& b = mesh.nodes[static_cast<std::size_t>(tri[1])];
    const Point& c = mesh.nodes[static_cast<std::size_t>(tri[2])];
    for (const auto& q : degree5_rule()) {
      const double x1 = q.l0 * a.x1 + q.l1 * b.x1 + q.l2 * c.x1;
      const double x2 = q.l0 * a.x2 + q.l1 * b.x2 + q.l2 * c.x2;
      const double diff = q.l0 * uv[0] + q.l1 * uv[1] + q.l2 * uv[2] - exact(x1, x2);
      sum += q.w * area * diff * diff;
    }
  }
  return std::sqrt(sum);
}

double evaluate(const Mesh& mesh, const Vector& dof_values, Point p) {
  const int n = mesh.n_div;
  int i = std::min(static_cast<int>(p.x1 * n), n - 1);
  int j = std::min(static_cast<int>(p.x2 * n), n - 1);
  i = std::max(i, 0);
  j = std::max(j, 0);
  const double s = p.x1 * n - i;
  const double t = p.x2 * n - j;
  const int side = n + 1;
  const int ll = j * side + i;
  const double v_ll = nodal(mesh, dof_values, ll);
  const double v_lr = nodal(mesh, dof_values, ll + 1);
  const double v_ur = nodal(mesh, dof_values, ll + side + 1);
  const double v_ul = nodal(mesh, dof_values, ll + side);
  // Lower triangle (ll, lr, ur) when s >= t, upper (ll, ur, ul) otherwise.
  if (s >= t) return v_ll + s * (v_lr - v_ll) + t * (v_ur - v_lr);
  return v_ll + t * (v_ul - v_ll) + s * (v_ur - v_ul);
}

}  // namespace oneshot::fem
