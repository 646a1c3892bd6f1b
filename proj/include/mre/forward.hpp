#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <optional>
#include <vector>

#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/mesh.hpp"

namespace mre {

/// Flux-conservative 5-point discretization of
///
///     -div(gamma grad u) - rho omega^2 u = 0,   u = g on the boundary,
///
/// assembled as A u_I = b over interior nodes, with Dirichlet values
/// eliminated into b. The face coefficient crossing the dual-cell edge
/// between nodes p and q is the area average of the two cells adjacent to
/// the grid edge pq, so faces normal to a grid-aligned interface see a single
/// layer and faces lying on the interface see the arithmetic mean.
///
/// The inertia term uses one of two 5-point stencils. `lumped` puts
/// rho omega^2 on the diagonal only. `corrected` spreads it as
/// rho omega^2 (u_p + (1/12) sum_q (u_q - u_p)), which cancels the leading
/// O(h^2 k^4) phase error of the Laplacian stencil along the grid axes while
/// keeping the scheme second order and the matrix sparsity unchanged. At
/// 250 Hz on the 120 mm domain this is the difference between 23% and 0.4%
/// L2 error at 121 x 121.
///
/// A is complex symmetric (A == A^T). The LU factorization is computed once
/// at construction and shared by copies; solves are const and may run
/// concurrently.
enum class MassStencil { lumped, corrected };

class HelmholtzOperator {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Complex>;

  HelmholtzOperator(const ModulusField& gamma, double rho, double omega, const WaveField& dirichlet,
                    std::optional<Bounds> bounds = std::nullopt, MassStencil mass = MassStencil::corrected)
      : grid_(gamma.grid()), gamma_(gamma), rho_(rho), omega_(omega), dirichlet_(dirichlet), mass_(mass) {
    if (!grid_.same_layout(dirichlet.grid())) {
      throw Error(ErrorCode::GridMismatch, "modulus and Dirichlet data live on different grids");
    }
    check_admissible(bounds);
    assemble();
    factorize();
  }

  const Grid& grid() const { return grid_; }
  const ModulusField& gamma() const { return gamma_; }
  double rho() const { return rho_; }
  double omega() const { return omega_; }
  MassStencil mass_stencil() const { return mass_; }
  const WaveField& dirichlet() const { return dirichlet_; }
  const SparseMatrix& matrix() const { return matrix_; }
  const Eigen::VectorXcd& rhs() const { return rhs_; }
  int num_interior() const { return (grid_.nx - 2) * (grid_.ny - 2); }

  int interior_index(int i, int j) const { return (j - 1) * (grid_.nx - 2) + (i - 1); }

  /// Face coefficient between (i, j) and (i+1, j).
  static Complex face_x(const ModulusField& c, int i, int j) {
    const Grid& g = c.grid();
    if (j == 0) return c.gamma(i, 0);
    if (j == g.ny - 1) return c.gamma(i, g.ny - 2);
    return 0.5 * (c.gamma(i, j - 1) + c.gamma(i, j));
  }

  /// Face coefficient between (i, j) and (i, j+1).
  static Complex face_y(const ModulusField& c, int i, int j) {
    const Grid& g = c.grid();
    if (i == 0) return c.gamma(0, j);
    if (i == g.nx - 1) return c.gamma(g.nx - 2, j);
    return 0.5 * (c.gamma(i - 1, j) + c.gamma(i, j));
  }

  /// Interior values of K(coef) u, where K is the discrete -div(coef grad .)
  /// acting on the full nodal field u (boundary values included).
  static Eigen::VectorXcd apply_stiffness(const ModulusField& coef, const WaveField& u) {
    const Grid& g = coef.grid();
    if (!g.same_layout(u.grid())) throw Error(ErrorCode::GridMismatch, "stiffness: grid mismatch");
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    Eigen::VectorXcd out((g.nx - 2) * (g.ny - 2));
    for (int j = 1; j < g.ny - 1; ++j) {
      for (int i = 1; i < g.nx - 1; ++i) {
        const Complex up = u(i, j);
        Complex s = face_x(coef, i, j) * ax * (up - u(i + 1, j)) +
                    face_x(coef, i - 1, j) * ax * (up - u(i - 1, j)) +
                    face_y(coef, i, j) * ay * (up - u(i, j + 1)) +
                    face_y(coef, i, j - 1) * ay * (up - u(i, j - 1));
        out[(j - 1) * (g.nx - 2) + (i - 1)] = s;
      }
    }
    return out;
  }

  /// Weight of each neighbour in the inertia stencil (0 when lumped).
  double mass_neighbour_weight() const { return mass_ == MassStencil::corrected ? 1.0 / 12.0 : 0.0; }

  /// Interior residual K(gamma) u - rho omega^2 M u of a full nodal field.
  Eigen::VectorXcd pde_residual(const WaveField& u) const {
    Eigen::VectorXcd r = apply_stiffness(gamma_, u);
    const double m = rho_ * omega_ * omega_, c = mass_neighbour_weight();
    for (int j = 1; j < grid_.ny - 1; ++j) {
      for (int i = 1; i < grid_.nx - 1; ++i) {
        const Complex up = u(i, j);
        const Complex spread = u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * up;
        r[interior_index(i, j)] -= m * (up + c * spread);
      }
    }
    return r;
  }

  /// Solution with the stored Dirichlet data.
  WaveField solve() const {
    WaveField u = dirichlet_;
    scatter_interior(solve_interior(rhs_), u);
    return u;
  }

  /// Zero-Dirichlet solve of A x = f over interior nodes.
  Eigen::VectorXcd solve_interior(const Eigen::VectorXcd& f) const {
    if (f.size() != num_interior()) throw Error(ErrorCode::DimensionMismatch, "rhs length mismatch");
    Eigen::VectorXcd x = lu_->solve(f);
    const double fn = f.norm();
    if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "nonfinite solution");
    if (fn == 0.0) return x;
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXcd r = f - matrix_ * x;
      if (r.norm() <= kResidualTol * fn) return x;
      x += lu_->solve(r);
    }
    const double rel = (f - matrix_ * x).norm() / fn;
    if (rel > kResidualTol) {
      throw Error(ErrorCode::SolverDivergence, "relative residual " + std::to_string(rel));
    }
    return x;
  }

  /// Sensitivity problem: zero Dirichlet data and source -div(dgamma grad u_base),
  /// discretized with the same face fluxes as the operator.
  WaveField solve_source(const ModulusField& dgamma, const WaveField& u_base) const {
    if (!grid_.same_layout(dgamma.grid()) || !grid_.same_layout(u_base.grid())) {
      throw Error(ErrorCode::GridMismatch, "sensitivity inputs on a different grid");
    }
    WaveField out(grid_);
    if (dgamma.is_zero()) return out;
    const Eigen::VectorXcd f = -apply_stiffness(dgamma, u_base);
    scatter_interior(solve_interior(f), out);
    return out;
  }

  void scatter_interior(const Eigen::VectorXcd& x, WaveField& u) const {
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i) u(i, j) = x[interior_index(i, j)];
  }

  Eigen::VectorXcd gather_interior(const WaveField& u) const {
    Eigen::VectorXcd x(num_interior());
    for (int j = 1; j < grid_.ny - 1; ++j)
      for (int i = 1; i < grid_.nx - 1; ++i) x[interior_index(i, j)] = u(i, j);
    return x;
  }

  static constexpr double kResidualTol = 1e-10;

 private:
  void check_admissible(const std::optional<Bounds>& bounds) const {
    const auto& s = gamma_.storage();
    const auto& l = gamma_.loss();
    if (s.size() == 0) throw Error(ErrorCode::NotInAdmissibleSet, "empty modulus field");
    if (!s.allFinite() || !l.allFinite() || s.minCoeff() <= 0.0 || l.minCoeff() < 0.0) {
      throw Error(ErrorCode::NotInAdmissibleSet, "storage modulus must be positive and loss nonnegative");
    }
    if (bounds) {
      const bool elastic = l.isZero(0.0);
      if (!in_admissible_set(gamma_, *bounds, elastic)) {
        throw Error(ErrorCode::NotInAdmissibleSet, "modulus outside the admissible box");
      }
    }
  }

  void assemble() {
    const Grid& g = grid_;
    const int n = num_interior();
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    const double mass = rho_ * omega_ * omega_;
    const double spread = mass * mass_neighbour_weight();
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(5 * n));
    rhs_ = Eigen::VectorXcd::Zero(n);
    for (int j = 1; j < g.ny - 1; ++j) {
      for (int i = 1; i < g.nx - 1; ++i) {
        const int p = interior_index(i, j);
        Complex diag = -mass;
        auto couple = [&](int qi, int qj, Complex a) {
          diag += a;
          if (g.on_boundary(qi, qj)) {
            rhs_[p] += a * dirichlet_(qi, qj);
          } else {
            trip.emplace_back(p, interior_index(qi, qj), -a);
          }
        };
        couple(i + 1, j, face_x(gamma_, i, j) * ax);
        couple(i - 1, j, face_x(gamma_, i - 1, j) * ax);
        couple(i, j + 1, face_y(gamma_, i, j) * ay);
        couple(i, j - 1, face_y(gamma_, i, j - 1) * ay);
        if (spread != 0.0) {
          couple(i + 1, j, spread);
          couple(i - 1, j, spread);
          couple(i, j + 1, spread);
          couple(i, j - 1, spread);
        }
        trip.emplace_back(p, p, diag);
      }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
  }

  void factorize() {
    lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(matrix_);
    lu_->factorize(matrix_);
    if (lu_->info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem,
                  "factorization failed (interior resonance?): " + lu_->lastErrorMessage());
    }
  }

  Grid grid_;
  ModulusField gamma_;
  double rho_;
  double omega_;
  WaveField dirichlet_;
  MassStencil mass_;
  SparseMatrix matrix_;
  Eigen::VectorXcd rhs_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

/// Convenience: assemble and solve in one call.
inline WaveField solve_forward(const ModulusField& gamma, double rho, double omega, const WaveField& dirichlet,
                               MassStencil mass = MassStencil::corrected) {
  return HelmholtzOperator(gamma, rho, omega, dirichlet, std::nullopt, mass).solve();
}

}  // namespace mre
