#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace msee {

/// Which evolution triple the grid realizes.
///
/// PorousMedium:      X = L^q(O),  H = W^{-1,2}(O), pairing through (-Δ)^{-1}.
/// ReactionDiffusion: X1 = W^{1,q1}_0(O), X2 = L^{q2}(O), H = L^2(O).
enum class Flavor { PorousMedium, ReactionDiffusion };

/// Selects one of the two reflexive spaces X1, X2 of the triple.
enum class Space { X1, X2 };

/// Finite-dimensional realization of X ⊂ H ≃ H* ⊂ X* on a uniform grid of
/// O = (0, 1) with homogeneous Dirichlet boundary conditions.
///
/// The Galerkin basis consists of the eigenvectors of the discrete Dirichlet
/// Laplacian L, normalized in the flavor's H-inner product. Since these are
/// simultaneously orthogonal in L^2 and W^{-1,2}, projections and (-L)^{-1}
/// reduce to diagonal scalings in the eigenbasis.
///
/// Instances are immutable after construction.
class DiscreteTriple {
 public:
  DiscreteTriple(Flavor flavor, std::size_t n_grid, double q1 = 2.0,
                 double q2 = 2.0);

  Flavor flavor() const { return flavor_; }
  std::size_t n_grid() const { return n_grid_; }
  double h() const { return h_; }
  double length() const { return 1.0; }
  double q1() const { return q1_; }
  double q2() const { return q2_; }
  double exponent(Space s) const { return s == Space::X1 ? q1_ : q2_; }
  std::uint64_t id() const { return id_; }

  /// Interior nodes x_j = j h, j = 1..n_grid.
  const Eigen::VectorXd& nodes() const { return nodes_; }
  /// Dense second-order Dirichlet Laplacian (negative definite).
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  /// Eigenvalues mu_i > 0 of -L, ascending.
  const Eigen::VectorXd& eigenvalues() const { return mu_; }
  /// Columns are the H-orthonormal eigenvectors e_i.
  const Eigen::MatrixXd& basis() const { return basis_; }
  /// Columns d_i with [e_i, u] = d_i^T u, so coordinates are D^T u.
  const Eigen::MatrixXd& dual_basis() const { return dual_basis_; }

  Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& v) const;
  Eigen::VectorXd solve_neg_laplacian(const Eigen::VectorXd& v) const;

  /// Grid representation of the H-inner product matrix applied to v
  /// (h (-L)^{-1} v or h v).
  Eigen::VectorXd riesz(const Eigen::VectorXd& v) const;

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double norm_h(const Eigen::VectorXd& u) const;
  /// [x, f]_X for f given in X*-grid coordinates.
  double pairing(const Eigen::VectorXd& x, const Eigen::VectorXd& f) const;

  /// Discrete L^q norm (h Σ |u_j|^q)^{1/q}.
  double lq_norm(const Eigen::VectorXd& u, double q) const;
  /// Forward differences (u_{k+1} - u_k)/h, k = 0..n_grid, zero padded.
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
  /// Norm of X1 or X2. For ReactionDiffusion X1 uses the gradient L^q1 norm.
  double norm_x(const Eigen::VectorXd& u, Space s) const;
  /// Dual norm in X_s^* of the functional v -> [v, f]_X.
  double dual_norm(const Eigen::VectorXd& f, Space s) const;

  /// First n Galerkin coordinates [e_i, u]_X.
  Eigen::VectorXd coordinates(const Eigen::VectorXd& u, std::size_t n) const;
  /// Σ_i c_i e_i for the leading coordinates c.
  Eigen::VectorXd synthesize(const Eigen::VectorXd& coords) const;

 private:
  Flavor flavor_;
  std::size_t n_grid_;
  double h_;
  double q1_;
  double q2_;
  std::uint64_t id_;
  Eigen::VectorXd nodes_;
  Eigen::MatrixXd laplacian_;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd orthonormal_;  // Euclidean-orthonormal eigenvectors
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd dual_basis_;
};

/// A state u on the grid of a specific triple.
struct GridFunction {
  std::uint64_t triple_id = 0;
  Eigen::VectorXd values;
};

/// Wraps values, checking length and finiteness.
GridFunction make_grid_function(const DiscreteTriple& t, Eigen::VectorXd values);

double h_inner(const GridFunction& u, const GridFunction& v,
               const DiscreteTriple& t);
double x_norm(const GridFunction& u, const DiscreteTriple& t, Space which);
double dual_pairing(const GridFunction& x, const GridFunction& f,
                    const DiscreteTriple& t);
/// H-orthogonal projection onto span{e_1..e_n}.
GridFunction project(const GridFunction& u, std::size_t n,
                     const DiscreteTriple& t);

/// Throws DimensionError unless v has the triple's grid length.
void require_grid(const DiscreteTriple& t, const Eigen::VectorXd& v,
                  const char* what);

}  // namespace msee
