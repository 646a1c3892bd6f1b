#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/forward.hpp"
#include "mre/model.hpp"

namespace mre {

/// Directional derivative u' = F'(gamma) dgamma: the zero-Dirichlet solution
/// driven by -div(dgamma grad u), where u is the forward solution of `op`.
inline WaveField frechet_apply(const HelmholtzOperator& op, const WaveField& u, const ModulusField& dgamma) {
  return op.solve_source(dgamma, u);
}

inline WaveField frechet_apply(const ModulusField& gamma, double rho, double omega, const WaveField& u,
                               const ModulusField& dgamma) {
  return frechet_apply(HelmholtzOperator(gamma, rho, omega, u), u, dgamma);
}

/// Sensitivities of the sampled field with respect to the real scaled
/// parameters, together with the data-space Gram matrix
/// gram(a, b) = weight * Re <J_a, J_b>. The weight lets the driver work with
/// relative residuals; it multiplies every data-space pairing consistently.
struct Jacobian {
  std::vector<WaveField> columns;
  DataNorm norm = DataNorm::h1;
  double weight = 1.0;
  Eigen::MatrixXd gram;

  int size() const { return static_cast<int>(columns.size()); }
  const Grid& grid() const { return columns.front().grid(); }
};

inline Eigen::MatrixXd gram_matrix(const std::vector<WaveField>& cols, DataNorm norm, double weight) {
  const auto m = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      g(a, b) = weight * data_inner(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)], norm).real();
      g(b, a) = g(a, b);
    }
  }
  return g;
}

inline Jacobian make_jacobian(std::vector<WaveField> columns, DataNorm norm, double weight = 1.0) {
  if (columns.empty()) throw Error(ErrorCode::DimensionMismatch, "jacobian needs at least one column");
  Jacobian j;
  j.gram = gram_matrix(columns, norm, weight);
  j.columns = std::move(columns);
  j.norm = norm;
  j.weight = weight;
  return j;
}

/// One sensitivity solve per real parameter, reusing the factorization of the
/// current forward operator. Columns follow the ParameterMap order.
inline Jacobian assemble_jacobian(const LayeredForwardModel& model, const LayeredForwardModel::Evaluation& at,
                                  const ParameterMap& map, DataNorm norm, double weight = 1.0) {
  std::vector<WaveField> cols;
  cols.reserve(static_cast<std::size_t>(map.size()));
  for (int k = 0; k < map.size(); ++k) {
    const ModulusField dgamma = map.unit_increment(k).expand(model.solver_grid());
    cols.push_back(model.restrict_to_data(frechet_apply(at.op, at.fine, dgamma)));
  }
  return make_jacobian(std::move(cols), norm, weight);
}

inline void check_length(const Jacobian& j, const Eigen::VectorXd& p) {
  if (p.size() != j.size()) throw Error(ErrorCode::DimensionMismatch, "parameter vector length");
}

/// J p as a field.
inline WaveField apply(const Jacobian& j, const Eigen::VectorXd& p) {
  check_length(j, p);
  WaveField out(j.grid());
  for (int k = 0; k < j.size(); ++k) out.values() += p[k] * j.columns[static_cast<std::size_t>(k)].values();
  return out;
}

/// (J^* M J + alpha I) p, with M the data-space Gram operator.
inline Eigen::VectorXd normal_apply(const Jacobian& j, double alpha, const Eigen::VectorXd& p) {
  check_length(j, p);
  if (alpha < 0.0) throw Error(ErrorCode::InvalidConfig, "alpha must be nonnegative");
  return j.gram * p + alpha * p;
}

/// J^* r: entry k is weight * Re <J_k, r> in the data-space inner product.
inline Eigen::VectorXd gradient(const Jacobian& j, const WaveField& residual) {
  Eigen::VectorXd g(j.size());
  for (int k = 0; k < j.size(); ++k) {
    g[k] = j.weight * data_inner(j.columns[static_cast<std::size_t>(k)], residual, j.norm).real();
  }
  return g;
}

}  // namespace mre
