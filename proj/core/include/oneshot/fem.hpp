#pragma once

// Piecewise-linear finite elements for the Poisson problem on the unit
// square with homogeneous Dirichlet data. Boundary nodes are eliminated, so
// every operator lives on interior degrees of freedom only.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "oneshot/types.hpp"

namespace oneshot::fem {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Uniform triangulation of (0,1)^2. Nodes are numbered row-major
/// (x1 fastest); every cell is split along its lower-left to upper-right
/// diagonal into two counter-clockwise right triangles.
struct Mesh {
  int n_div = 0;
  double h = 0.0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  /// node index -> DOF index, or -1 for boundary nodes.
  std::vector<int> interior_map;
  /// DOF index -> node index.
  std::vector<int> dof_nodes;
  int n_dof = 0;

  int n_triangles() const noexcept { return static_cast<int>(triangles.size()); }
  double signed_area(int t) const;
  Point centroid(int t) const;
};

Mesh build_mesh(int n_div);

/// Symmetric sparse matrix on the interior DOF space. Both triangles of the
/// symmetric pattern are stored.
class SparseOperator {
 public:
  struct Entry {
    int row;
    int col;
    double value;
  };
  using Storage = Eigen::SparseMatrix<double>;

  SparseOperator() = default;
  explicit SparseOperator(Storage m) : m_(std::move(m)) {}

  int dimension() const noexcept { return static_cast<int>(m_.rows()); }
  double value(int row, int col) const { return m_.coeff(row, col); }
  std::vector<Entry> entries() const;
  Vector apply(const Vector& v) const { return m_ * v; }
  const Storage& matrix() const noexcept { return m_; }
  Matrix dense() const { return Matrix(m_); }

  SparseOperator scaled(double c) const { return SparseOperator(Storage(c * m_)); }

 private:
  Storage m_;
};

SparseOperator assemble_stiffness(const Mesh& mesh, std::span<const double> coeff);

/// Same bilinear form without the positivity check. Used for the terms of an
/// affine coefficient expansion, whose individual coefficients change sign.
SparseOperator assemble_stiffness_term(const Mesh& mesh, std::span<const double> coeff);
SparseOperator assemble_mass(const Mesh& mesh);

/// Load vector with one-point centroid quadrature per triangle.
Vector assemble_load(const Mesh& mesh,
                     const std::function<double(double, double)>& f);

/// Cholesky factorization of an SPD operator with a residual check on every
/// solve (relative residual <= 1e-10, else SolverFailure).
class SpdSolver {
 public:
  explicit SpdSolver(const SparseOperator& a);
  Vector solve(const Vector& b) const;

 private:
  SparseOperator::Storage a_;
  Eigen::SimplicialLLT<SparseOperator::Storage> llt_;
};

Vector solve_spd(const SparseOperator& a, const Vector& b);

inline constexpr double kSolveTolerance = 1e-10;

/// L2(D) norm of u_h - exact with a degree-5 rule on every triangle; boundary
/// nodal values of u_h are zero.
double l2_error(const Mesh& mesh, const Vector& u_h,
                const std::function<double(double, double)>& exact);

/// Value of the piecewise-linear interpolant of `dof_values` at a point.
double evaluate(const Mesh& mesh, const Vector& dof_values, Point p);

}  // namespace oneshot::fem
