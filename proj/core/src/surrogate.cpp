#include "oneshot/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "oneshot/error.hpp"

namespace oneshot::surrogate {

MultiIndexSet gen_total_degree(int s, int degree) {
  if (s < 1) throw InvalidArgument("gen_total_degree: s must be >= 1");
  if (degree < 0) throw InvalidArgument("gen_total_degree: degree must be >= 0");
  MultiIndexSet set{s, degree, {}};
  std::vector<int> nu(static_cast<std::size_t>(s), 0);
  std::function<void(int, int)> fill = [&](int pos, int budget) {
    if (pos == s) {
      set.indices.push_back(nu);
      return;
    }
    for (int v = 0; v <= budget; ++v) {
      nu[static_cast<std::size_t>(pos)] = v;
      fill(pos + 1, budget - v);
    }
    nu[static_cast<std::size_t>(pos)] = 0;
  };
  fill(0, degree);
  auto order = [](const std::vector<int>& nu_) {
    int sum = 0;
    for (int v : nu_) sum += v;
    return sum;
  };
  std::sort(set.indices.begin(), set.indices.end(), [&](const auto& a, const auto& b) {
    const int oa = order(a);
    const int ob = order(b);
    if (oa != ob) return oa < ob;
    return a < b;
  });
  return set;
}

std::size_t total_degree_cardinality(int s, int degree) {
  // C(degree + s, s), built incrementally so it stays exact.
  std::size_t c = 1;
  for (int i = 1; i <= s; ++i) {
    c = c * static_cast<std::size_t>(degree + i) / static_cast<std::size_t>(i);
  }
  return c;
}

double legendre_1d(int k, double t) {
  if (k < 0) throw InvalidArgument("legendre_1d: degree must be >= 0");
  if (k == 0) return 1.0;
  double p_prev = 1.0;
  double p = t;
  for (int m = 1; m < k; ++m) {
    const double next = ((2.0 * m + 1.0) * t * p - m * p_prev) / (m + 1.0);
    p_prev = p;
    p = next;
  }
  return std::sqrt(2.0 * k + 1.0) * p;
}

LinearSurrogate::LinearSurrogate(MultiIndexSet basis, int n_dof, BasisKind kind)
    : basis_(std::move(basis)), n_dof_(n_dof), kind_(kind) {
  if (n_dof_ < 1) throw InvalidArgument("LinearSurrogate: n_dof must be >= 1");
}

std::string LinearSurrogate::kind() const {
  return kind_ == BasisKind::legendre ? "legendre" : "monomial";
}

std::string LinearSurrogate::flattening() const {
  std::ostringstream os;
  os << "column-major theta[nu*" << n_dof_ << "+dof], " << basis_.size()
     << " basis functions (graded lexicographic, s=" << basis_.s << ", degree=" << basis_.degree
     << ") x " << n_dof_ << " dofs";
  return os.str();
}

Vector LinearSurrogate::basis_values(const ParamSample& y) const {
  if (y.size() != basis_.s) throw InvalidArgument("LinearSurrogate: parameter dimension mismatch");
  const int deg = basis_.degree;
  // table(k, j) = B_k(y_j)
  Matrix table(deg + 1, basis_.s);
  for (int j = 0; j < basis_.s; ++j) {
    for (int k = 0; k <= deg; ++k) {
      table(k, j) = kind_ == BasisKind::legendre ? legendre_1d(k, y[j]) : std::pow(y[j], k);
    }
  }
  Vector b(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t n = 0; n < basis_.size(); ++n) {
    double v = 1.0;
    const auto& nu = basis_.indices[n];
    for (int j = 0; j < basis_.s; ++j) v *= table(nu[static_cast<std::size_t>(j)], j);
    b[static_cast<Eigen::Index>(n)] = v;
  }
  return b;
}

Vector LinearSurrogate::eval(const Vector& theta, const ParamSample& y) const {
  if (static_cast<std::size_t>(theta.size()) != param_count())
    throw InvalidArgument("LinearSurrogate::eval: parameter length mismatch");
  Eigen::Map<const Matrix> coeffs(theta.data(), n_dof_, n_basis());
  return coeffs * basis_values(y);
}

Vector LinearSurrogate::vjp(const Vector& theta, const ParamSample& y, const Vector& w) const {
  if (static_cast<std::size_t>(theta.size()) != param_count() || w.size() != n_dof_)
    throw InvalidArgument("LinearSurrogate::vjp: dimension mismatch");
  const Vector b = basis_values(y);
  Vector grad(theta.size());
  Eigen::Map<Matrix> g(grad.data(), n_dof_, n_basis());
  g.noalias() = w * b.transpose();
  return grad;
}

Vector LinearSurrogate::initial(InitMode mode, Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(param_count());
  switch (mode) {
    case InitMode::ones:
      return Vector::Ones(n);
    case InitMode::zeros:
      return Vector::Zero(n);
    case InitMode::scaled_uniform: {
      const double r = std::sqrt(6.0 / (n_basis() + n_dof_));
      Vector theta(n);
      for (Eigen::Index i = 0; i < n; ++i) theta[i] = rng.uniform(-r, r);
      return theta;
    }
  }
  return Vector::Zero(n);
}

NeuralSurrogate::NeuralSurrogate(std::vector<int> layer_sizes) : layers_(std::move(layer_sizes)) {
  if (layers_.size() < 2) throw InvalidArgument("NeuralSurrogate: need at least input and output layer");
  for (int n : layers_)
    if (n < 1) throw InvalidArgument("NeuralSurrogate: layer sizes must be positive");
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += static_cast<std::size_t>(layers_[l] * layers_[l - 1] + layers_[l]);
  }
}

std::string NeuralSurrogate::flattening() const {
  std::ostringstream os;
  os << "layer-by-layer [W_l row-major (N_l x N_{l-1}), b_l], sizes [";
  for (std::size_t l = 0; l < layers_.size(); ++l) os << (l ? "," : "") << layers_[l];
  os << "]";
  return os.str();
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Vector NeuralSurrogate::eval(const Vector& theta, const ParamSample& y) const {
  if (static_cast<std::size_t>(theta.size()) != param_count_)
    throw InvalidArgument("NeuralSurrogate::eval: parameter length mismatch");
  if (y.size() != layers_.front()) throw InvalidArgument("NeuralSurrogate::eval: input size mismatch");
  Vector x = y;
  const std::size_t n_layers = layers_.size() - 1;
  for (std::size_t l = 1; l <= n_layers; ++l) {
    const int rows = layers_[l];
    const int cols = layers_[l - 1];
    const double* base = theta.data() + offsets_[l - 1];
    Eigen::Map<const RowMajor> w(base, rows, cols);
    Eigen::Map<const Vector> b(base + rows * cols, rows);
    Vector pre = w * x + b;
    if (l < n_layers) pre = pre.unaryExpr([](double v) { return sigmoid(v); });
    x = std::move(pre);
  }
  return x;
}

Vector NeuralSurrogate::vjp(const Vector& theta, const ParamSample& y, const Vector& w_out) const {
  if (static_cast<std::size_t>(theta.size()) != param_count_ || w_out.size() != layers_.back() ||
      y.size() != layers_.front())
    throw InvalidArgument("NeuralSurrogate::vjp: dimension mismatch");
  const std::size_t n_layers = layers_.size() - 1;
  std::vector<Vector> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(y);
  for (std::size_t l = 1; l <= n_layers; ++l) {
    const int rows = layers_[l];
    const int cols = layers_[l - 1];
    const double* base = theta.data() + offsets_[l - 1];
    Eigen::Map<const RowMajor> w(base, rows, cols);
    Eigen::Map<const Vector> b(base + rows * cols, rows);
    Vector pre = w * acts.back() + b;
    if (l < n_layers) pre = pre.unaryExpr([](double v) { return sigmoid(v); });
    acts.push_back(std::move(pre));
  }

  Vector grad = Vector::Zero(theta.size());
  Vector delta = w_out;
  for (std::size_t l = n_layers; l >= 1; --l) {
    const int rows = layers_[l];
    const int cols = layers_[l - 1];
    const std::size_t off = offsets_[l - 1];
    Eigen::Map<RowMajor> gw(grad.data() + off, rows, cols);
    Eigen::Map<Vector> gb(grad.data() + off + rows * cols, rows);
    gw.noalias() = delta * acts[l - 1].transpose();
    gb = delta;
    if (l == 1) break;
    Eigen::Map<const RowMajor> w(theta.data() + off, rows, cols);
    const Vector& a = acts[l - 1];
    delta = (w.transpose() * delta).cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
  }
  return grad;
}

Vector NeuralSurrogate::initial(InitMode mode, Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(param_count_);
  switch (mode) {
    case InitMode::ones:
      return Vector::Ones(n);
    case InitMode::zeros:
      return Vector::Zero(n);
    case InitMode::scaled_uniform: {
      Vector theta = Vector::Zero(n);
      for (std::size_t l = 1; l < layers_.size(); ++l) {
        const int rows = layers_[l];
        const int cols = layers_[l - 1];
        const double r = std::sqrt(6.0 / (rows + cols));
        const auto off = static_cast<Eigen::Index>(offsets_[l - 1]);
        for (Eigen::Index i = 0; i < rows * cols; ++i) theta[off + i] = rng.uniform(-r, r);
      }
      return theta;
    }
  }
  return Vector::Zero(n);
}

std::unique_ptr<Surrogate> make_surrogate(const SurrogateSpec& spec, int s, int n_dof) {
  if (spec.kind == "legendre" || spec.kind == "monomial") {
    return std::make_unique<LinearSurrogate>(
        gen_total_degree(s, spec.degree), n_dof,
        spec.kind == "legendre" ? BasisKind::legendre : BasisKind::monomial);
  }
  if (spec.kind == "nn") {
    std::vector<int> layers{s};
    layers.insert(layers.end(), spec.hidden.begin(), spec.hidden.end());
    layers.push_back(n_dof);
    return std::make_unique<NeuralSurrogate>(std::move(layers));
  }
  throw InvalidArgument("unknown surrogate kind '" + spec.kind + "'");
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "ones") return InitMode::ones;
  if (name == "zeros") return InitMode::zeros;
  if (name == "scaled_uniform") return InitMode::scaled_uniform;
  throw InvalidArgument("unknown init mode '" + std::string(name) + "'");
}

std::string_view to_string(InitMode mode) {
  switch (mode) {
    case InitMode::ones: return "ones";
    case InitMode::zeros: return "zeros";
    case InitMode::scaled_uniform: return "scaled_uniform";
  }
  return "ones";
}

}  // namespace oneshot::surrogate
