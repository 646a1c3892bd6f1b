#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "mre/analytic.hpp"
#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/forward.hpp"
#include "mre/mesh.hpp"

namespace mre {

struct Physics {
  double rho = 1000.0;
  double omega = 0.0;
  TwoLayerGeometry geometry;
};

/// Real unknowns of the layered inversion, nondimensionalized by reference
/// values: p_k = value_k / scale_k. Order (G'1, G''1, G'2, G''2); elastic
/// mode keeps only the storage moduli.
class ParameterMap {
 public:
  ParameterMap(bool elastic, const LayeredParams& reference) : elastic_(elastic) {
    slots_ = elastic ? std::vector<int>{0, 2} : std::vector<int>{0, 1, 2, 3};
    const auto ref = reference.as_array();
    for (int s : slots_) {
      const double v = std::abs(ref[static_cast<std::size_t>(s)]);
      scale_[static_cast<std::size_t>(s)] = v > 0.0 ? v : 1.0;
    }
  }

  bool elastic() const { return elastic_; }
  int size() const { return static_cast<int>(slots_.size()); }
  const std::vector<int>& slots() const { return slots_; }
  double scale(int k) const { return scale_[static_cast<std::size_t>(slots_[static_cast<std::size_t>(k)])]; }

  Eigen::VectorXd to_scaled(const LayeredParams& p) const {
    const auto a = p.as_array();
    Eigen::VectorXd out(size());
    for (int k = 0; k < size(); ++k) out[k] = a[static_cast<std::size_t>(slots_[k])] / scale(k);
    return out;
  }

  LayeredParams to_params(const Eigen::VectorXd& scaled) const {
    if (scaled.size() != size()) throw Error(ErrorCode::DimensionMismatch, "parameter vector length");
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < size(); ++k) a[static_cast<std::size_t>(slots_[k])] = scaled[k] * scale(k);
    return LayeredParams::from_array(a);
  }

  /// Increment in Pa produced by a unit change of scaled parameter k.
  LayeredParams unit_increment(int k) const {
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};
    a[static_cast<std::size_t>(slots_[static_cast<std::size_t>(k)])] = scale(k);
    return LayeredParams::from_array(a);
  }

 private:
  bool elastic_;
  std::vector<int> slots_;
  std::array<double, 4> scale_{1.0, 1.0, 1.0, 1.0};
};

/// How the forward problem is discretized: the data grid refined by an
/// integer factor, and the inertia stencil.
struct Discretization {
  int refinement = 1;
  MassStencil mass = MassStencil::corrected;
};

/// Measurement map for layered moduli: solve on a solver grid that refines
/// the data grid by an integer factor and sample the solution at the data
/// nodes. Refinement 1 solves directly on the data grid.
class LayeredForwardModel {
 public:
  struct Evaluation {
    HelmholtzOperator op;
    WaveField fine;  ///< solution on the solver grid
    WaveField data;  ///< solution sampled at the data nodes
  };

  LayeredForwardModel(Grid data_grid, Physics physics, Discretization disc = {},
                      std::optional<Bounds> bounds = std::nullopt)
      : data_grid_(std::move(data_grid)),
        solver_grid_(refine(data_grid_, disc.refinement)),
        physics_(physics),
        refinement_(disc.refinement),
        mass_(disc.mass),
        bounds_(bounds),
        boundary_(dirichlet_data(solver_grid_, physics_.geometry)) {
    if (!data_grid_.interface_row) throw Error(ErrorCode::GridMismatch, "data grid needs an interface row");
    if (!matches_geometry(data_grid_, physics_.geometry)) {
      throw Error(ErrorCode::GridMismatch, "data grid extents differ from the physical domain");
    }
  }

  const Grid& data_grid() const { return data_grid_; }
  const Grid& solver_grid() const { return solver_grid_; }
  const Physics& physics() const { return physics_; }
  int refinement() const { return refinement_; }
  Discretization discretization() const { return {refinement_, mass_}; }

  Evaluation evaluate(const LayeredParams& params) const {
    HelmholtzOperator op(params.expand(solver_grid_), physics_.rho, physics_.omega, boundary_, bounds_, mass_);
    WaveField fine = op.solve();
    WaveField data = restrict_to_data(fine);
    return {std::move(op), std::move(fine), std::move(data)};
  }

  WaveField operator()(const LayeredParams& params) const { return evaluate(params).data; }

  WaveField restrict_to_data(const WaveField& fine) const {
    if (!fine.grid().same_layout(solver_grid_)) throw Error(ErrorCode::GridMismatch, "not a solver-grid field");
    if (refinement_ == 1) {
      WaveField out = fine;
      return WaveField(data_grid_, out.values());
    }
    WaveField out(data_grid_);
    for (int j = 0; j < data_grid_.ny; ++j)
      for (int i = 0; i < data_grid_.nx; ++i) out(i, j) = fine(i * refinement_, j * refinement_);
    return out;
  }

 private:
  Grid data_grid_;
  Grid solver_grid_;
  Physics physics_;
  int refinement_;
  MassStencil mass_;
  std::optional<Bounds> bounds_;
  WaveField boundary_;
};

}  // namespace mre
