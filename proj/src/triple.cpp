#include "msee/triple.hpp"

#include <boost/math/tools/minima.hpp>

#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include "msee/errors.hpp"

namespace msee {

namespace {

std::uint64_t next_triple_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

double conjugate(double q) { return q / (q - 1.0); }

}  // namespace

DiscreteTriple::DiscreteTriple(Flavor flavor, std::size_t n_grid, double q1,
                               double q2)
    : flavor_(flavor),
      n_grid_(n_grid),
      h_(1.0 / static_cast<double>(n_grid + 1)),
      q1_(q1),
      q2_(q2),
      id_(next_triple_id()) {
  if (n_grid < 1) throw ConfigError("n_grid must be at least 1");
  if (!(q1 >= 2.0) || !(q2 >= 2.0))
    throw ConfigError("exponents q1, q2 must be >= 2");

  const auto n = static_cast<Eigen::Index>(n_grid);
  nodes_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) nodes_(j) = static_cast<double>(j + 1) * h_;

  const double inv_h2 = 1.0 / (h_ * h_);
  laplacian_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    laplacian_(j, j) = -2.0 * inv_h2;
    if (j > 0) laplacian_(j, j - 1) = inv_h2;
    if (j + 1 < n) laplacian_(j, j + 1) = inv_h2;
  }

  // Sine eigenpairs of the Dirichlet stencil.
  mu_.resize(n);
  orthonormal_.resize(n, n);
  const double scale = std::sqrt(2.0 * h_);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k + 1);
    const double s = std::sin(0.5 * kk * std::numbers::pi * h_);
    mu_(k) = 4.0 * inv_h2 * s * s;
    for (Eigen::Index j = 0; j < n; ++j)
      orthonormal_(j, k) =
          scale * std::sin(kk * static_cast<double>(j + 1) * std::numbers::pi * h_);
  }

  basis_.resize(n, n);
  dual_basis_.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (flavor_ == Flavor::ReactionDiffusion) {
      basis_.col(k) = orthonormal_.col(k) / std::sqrt(h_);
      dual_basis_.col(k) = h_ * basis_.col(k);
    } else {
      basis_.col(k) = orthonormal_.col(k) * std::sqrt(mu_(k) / h_);
      dual_basis_.col(k) = (h_ / mu_(k)) * basis_.col(k);
    }
  }
}

Eigen::VectorXd DiscreteTriple::apply_laplacian(const Eigen::VectorXd& v) const {
  require_grid(*this, v, "apply_laplacian");
  const auto n = v.size();
  const double inv_h2 = 1.0 / (h_ * h_);
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double left = j > 0 ? v(j - 1) : 0.0;
    const double right = j + 1 < n ? v(j + 1) : 0.0;
    out(j) = (left - 2.0 * v(j) + right) * inv_h2;
  }
  return out;
}

Eigen::VectorXd DiscreteTriple::solve_neg_laplacian(const Eigen::VectorXd& v) const {
  require_grid(*this, v, "solve_neg_laplacian");
  Eigen::VectorXd c = orthonormal_.transpose() * v;
  c.array() /= mu_.array();
  return orthonormal_ * c;
}

Eigen::VectorXd DiscreteTriple::riesz(const Eigen::VectorXd& v) const {
  if (flavor_ == Flavor::ReactionDiffusion) {
    require_grid(*this, v, "riesz");
    return h_ * v;
  }
  return h_ * solve_neg_laplacian(v);
}

double DiscreteTriple::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  require_grid(*this, u, "h_inner");
  require_grid(*this, v, "h_inner");
  if (flavor_ == Flavor::ReactionDiffusion) return h_ * u.dot(v);
  // Symmetric evaluation through the eigenbasis keeps the form exactly symmetric.
  const Eigen::VectorXd cu = orthonormal_.transpose() * u;
  const Eigen::VectorXd cv = orthonormal_.transpose() * v;
  return h_ * (cu.array() * cv.array() / mu_.array()).sum();
}

double DiscreteTriple::norm_h(const Eigen::VectorXd& u) const {
  return std::sqrt(std::max(0.0, inner(u, u)));
}

double DiscreteTriple::pairing(const Eigen::VectorXd& x, const Eigen::VectorXd& f) const {
  return inner(x, f);
}

double DiscreteTriple::lq_norm(const Eigen::VectorXd& u, double q) const {
  if (q == 2.0) return std::sqrt(h_ * u.squaredNorm());
  return std::pow(h_ * u.array().abs().pow(q).sum(), 1.0 / q);
}

Eigen::VectorXd DiscreteTriple::gradient(const Eigen::VectorXd& u) const {
  require_grid(*this, u, "gradient");
  const auto n = u.size();
  Eigen::VectorXd g(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) {
    const double right = k < n ? u(k) : 0.0;
    const double left = k > 0 ? u(k - 1) : 0.0;
    g(k) = (right - left) / h_;
  }
  return g;
}

double DiscreteTriple::norm_x(const Eigen::VectorXd& u, Space s) const {
  require_grid(*this, u, "x_norm");
  const double q = exponent(s);
  if (flavor_ == Flavor::ReactionDiffusion && s == Space::X1)
    return lq_norm(gradient(u), q);
  return lq_norm(u, q);
}

double DiscreteTriple::dual_norm(const Eigen::VectorXd& f, Space s) const {
  require_grid(*this, f, "dual_norm");
  const double qc = conjugate(exponent(s));
  if (flavor_ == Flavor::PorousMedium) return lq_norm(solve_neg_laplacian(f), qc);
  if (s == Space::X2) return lq_norm(f, qc);

  // W^{-1,q'}: write v -> h Σ v f as h Σ g_k (Dv)_k, with g defined up to a
  // constant since the range of D is the zero-sum subspace.
  const auto n = f.size();
  Eigen::VectorXd g(n + 1);
  g(0) = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) g(k) = g(k - 1) - h_ * f(k - 1);
  auto objective = [&](double c) {
    return h_ * (g.array() - c).abs().pow(qc).sum();
  };
  if (qc == 2.0) return std::sqrt(objective(g.mean()));
  const auto best = boost::math::tools::brent_find_minima(objective, g.minCoeff(),
                                                          g.maxCoeff(), 52);
  return std::pow(best.second, 1.0 / qc);
}

Eigen::VectorXd DiscreteTriple::coordinates(const Eigen::VectorXd& u,
                                            std::size_t n) const {
  require_grid(*this, u, "coordinates");
  if (n < 1 || n > n_grid_)
    throw DomainError("mode count " + std::to_string(n) + " outside [1, " +
                      std::to_string(n_grid_) + "]");
  return dual_basis_.leftCols(static_cast<Eigen::Index>(n)).transpose() * u;
}

Eigen::VectorXd DiscreteTriple::synthesize(const Eigen::VectorXd& coords) const {
  if (coords.size() < 1 || static_cast<std::size_t>(coords.size()) > n_grid_)
    throw DimensionError("coordinate vector longer than the basis");
  return basis_.leftCols(coords.size()) * coords;
}

void require_grid(const DiscreteTriple& t, const Eigen::VectorXd& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != t.n_grid())
    throw DimensionError(std::string(what) + ": vector of length " +
                         std::to_string(v.size()) + " on a grid of " +
                         std::to_string(t.n_grid()));
}

GridFunction make_grid_function(const DiscreteTriple& t, Eigen::VectorXd values) {
  require_grid(t, values, "grid function");
  for (Eigen::Index j = 0; j < values.size(); ++j)
    if (!std::isfinite(values(j)))
      throw NumericError("non-finite grid value", static_cast<std::size_t>(j));
  return GridFunction{t.id(), std::move(values)};
}

namespace {

void require_owner(const GridFunction& u, const DiscreteTriple& t) {
  if (u.triple_id != t.id())
    throw DimensionError("grid function belongs to a different triple");
  require_grid(t, u.values, "grid function");
}

}  // namespace

double h_inner(const GridFunction& u, const GridFunction& v, const DiscreteTriple& t) {
  require_owner(u, t);
  require_owner(v, t);
  return t.inner(u.values, v.values);
}

double x_norm(const GridFunction& u, const DiscreteTriple& t, Space which) {
  require_owner(u, t);
  return t.norm_x(u.values, which);
}

double dual_pairing(const GridFunction& x, const GridFunction& f,
                    const DiscreteTriple& t) {
  require_owner(x, t);
  require_owner(f, t);
  return t.pairing(x.values, f.values);
}

GridFunction project(const GridFunction& u, std::size_t n, const DiscreteTriple& t) {
  require_owner(u, t);
  return GridFunction{t.id(), t.synthesize(t.coordinates(u.values, n))};
}

}  // namespace msee
