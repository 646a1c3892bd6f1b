#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mre/error.hpp"

namespace mre {

/// Uniform vertex-centered grid on [0, x_extent] x [0, y_extent].
///
/// Node (i, j) sits at (i*hx, j*hy); nodes are numbered row-major with j
/// outer, so index = j*nx + i. Cells are the (nx-1)*(ny-1) rectangles
/// between nodes, numbered the same way.
struct Grid {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;
  double x_extent = 0.0;
  double y_extent = 0.0;
  /// Row j whose y-coordinate is the layer interface, when there is one.
  std::optional<int> interface_row;

  int num_nodes() const { return nx * ny; }
  int num_cells() const { return (nx - 1) * (ny - 1); }
  int node_index(int i, int j) const { return j * nx + i; }
  std::pair<int, int> node_coords(int index) const { return {index % nx, index / nx}; }
  int cell_index(int ci, int cj) const { return cj * (nx - 1) + ci; }
  double x(int i) const { return hx * i; }
  double y(int j) const { return hy * j; }
  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }

  /// Same node layout and spacing; the interface marker is ignored.
  bool same_layout(const Grid& other) const {
    return nx == other.nx && ny == other.ny && hx == other.hx && hy == other.hy;
  }
};

namespace detail {

inline void check_grid_counts(int nx, int ny, double x_extent, double y_extent) {
  if (nx < 3 || ny < 3) {
    throw Error(ErrorCode::InvalidConfig, "grid needs at least 3 nodes per axis");
  }
  if (!(x_extent > 0.0) || !(y_extent > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "grid extents must be positive");
  }
}

}  // namespace detail

/// Grid without an interface row.
inline Grid make_grid(int nx, int ny, double x_extent, double y_extent) {
  detail::check_grid_counts(nx, ny, x_extent, y_extent);
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.x_extent = x_extent;
  g.y_extent = y_extent;
  g.hx = x_extent / (nx - 1);
  g.hy = y_extent / (ny - 1);
  return g;
}

/// Grid whose row `round(x_L/hy)` coincides with the interface height x_L.
inline Grid build_grid(int nx, int ny, double x_extent, double y_extent, double x_L) {
  Grid g = make_grid(nx, ny, x_extent, y_extent);
  if (!(x_L > 0.0) || !(x_L < y_extent)) {
    throw Error(ErrorCode::InvalidConfig, "interface height must lie strictly inside the domain");
  }
  const double rows = x_L / g.hy;
  const double nearest = std::round(rows);
  if (std::abs(rows - nearest) > 1e-9) {
    throw Error(ErrorCode::NonAlignedInterface,
                "x_L/hy = " + std::to_string(rows) + " is not an integer row; change ny or x_L");
  }
  g.interface_row = static_cast<int>(nearest);
  return g;
}

/// Subdivide every cell into factor x factor cells; node (i, j) of the
/// coarse grid becomes node (factor*i, factor*j).
inline Grid refine(const Grid& coarse, int factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidConfig, "refinement factor must be >= 1");
  Grid g = make_grid((coarse.nx - 1) * factor + 1, (coarse.ny - 1) * factor + 1, coarse.x_extent,
                     coarse.y_extent);
  if (coarse.interface_row) g.interface_row = *coarse.interface_row * factor;
  return g;
}

enum class NodeKind : std::uint8_t {
  interior,
  dirichlet_top,
  dirichlet_bottom,
  dirichlet_left,
  dirichlet_right,
};

class BoundaryMask {
 public:
  explicit BoundaryMask(std::vector<NodeKind> kinds) : kinds_(std::move(kinds)) {}

  NodeKind kind(int index) const { return kinds_[static_cast<std::size_t>(index)]; }
  bool is_boundary(int index) const { return kind(index) != NodeKind::interior; }
  int size() const { return static_cast<int>(kinds_.size()); }

  int count(NodeKind k) const {
    int n = 0;
    for (auto v : kinds_) n += (v == k);
    return n;
  }
  int boundary_count() const { return size() - count(NodeKind::interior); }

 private:
  std::vector<NodeKind> kinds_;
};

/// Corners belong to the top/bottom edges.
inline BoundaryMask classify_boundary(const Grid& g) {
  std::vector<NodeKind> kinds(static_cast<std::size_t>(g.num_nodes()), NodeKind::interior);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      NodeKind k = NodeKind::interior;
      if (j == g.ny - 1) {
        k = NodeKind::dirichlet_top;
      } else if (j == 0) {
        k = NodeKind::dirichlet_bottom;
      } else if (i == 0) {
        k = NodeKind::dirichlet_left;
      } else if (i == g.nx - 1) {
        k = NodeKind::dirichlet_right;
      }
      kinds[static_cast<std::size_t>(g.node_index(i, j))] = k;
    }
  }
  return BoundaryMask(std::move(kinds));
}

}  // namespace mre
