#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mre/error.hpp"
#include "mre/mesh.hpp"

namespace mre {

using Complex = std::complex<double>;

/// Complex nodal values on a Grid, row-major with j outer.
class WaveField {
 public:
  WaveField() = default;
  explicit WaveField(Grid grid)
      : grid_(std::move(grid)), values_(Eigen::VectorXcd::Zero(grid_.num_nodes())) {}
  WaveField(Grid grid, Eigen::VectorXcd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.num_nodes()) {
      throw Error(ErrorCode::DimensionMismatch, "field length does not match nx*ny");
    }
  }

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXcd& values() const { return values_; }
  Eigen::VectorXcd& values() { return values_; }

  Complex operator()(int i, int j) const { return values_[grid_.node_index(i, j)]; }
  Complex& operator()(int i, int j) { return values_[grid_.node_index(i, j)]; }

  bool all_finite() const { return values_.allFinite(); }

  WaveField& operator+=(const WaveField& o) {
    require_same(o);
    values_ += o.values_;
    return *this;
  }
  WaveField& operator-=(const WaveField& o) {
    require_same(o);
    values_ -= o.values_;
    return *this;
  }
  WaveField& operator*=(Complex s) {
    values_ *= s;
    return *this;
  }
  friend WaveField operator+(WaveField a, const WaveField& b) { return a += b; }
  friend WaveField operator-(WaveField a, const WaveField& b) { return a -= b; }
  friend WaveField operator*(Complex s, WaveField a) { return a *= s; }

  void require_same(const WaveField& o) const {
    if (!grid_.same_layout(o.grid_)) throw Error(ErrorCode::GridMismatch, "fields live on different grids");
  }

 private:
  Grid grid_;
  Eigen::VectorXcd values_;
};

/// Box constraints of the admissible set. In elastic mode the loss modulus
/// is pinned to zero and its bounds are not used.
struct Bounds {
  double storage_min = 1.0e3;
  double storage_max = 1.0e5;
  double loss_min = 1.0;
  double loss_max = 1.0e4;
};

/// Piecewise-constant modulus, one value per grid cell (Pa). Also used for
/// increments, which carry no sign restriction.
class ModulusField {
 public:
  ModulusField() = default;
  explicit ModulusField(Grid grid)
      : grid_(std::move(grid)),
        storage_(Eigen::VectorXd::Zero(grid_.num_cells())),
        loss_(Eigen::VectorXd::Zero(grid_.num_cells())) {}

  ModulusField(Grid grid, Eigen::VectorXd storage, Eigen::VectorXd loss)
      : grid_(std::move(grid)), storage_(std::move(storage)), loss_(std::move(loss)) {
    if (storage_.size() != grid_.num_cells() || loss_.size() != grid_.num_cells()) {
      throw Error(ErrorCode::DimensionMismatch, "modulus field length does not match cell count");
    }
  }

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& storage() const { return storage_; }
  const Eigen::VectorXd& loss() const { return loss_; }
  Eigen::VectorXd& storage() { return storage_; }
  Eigen::VectorXd& loss() { return loss_; }

  Complex gamma(int cell) const { return {storage_[cell], loss_[cell]}; }
  Complex gamma(int ci, int cj) const { return gamma(grid_.cell_index(ci, cj)); }

  bool is_zero() const { return storage_.isZero(0.0) && loss_.isZero(0.0); }

 private:
  Grid grid_;
  Eigen::VectorXd storage_;
  Eigen::VectorXd loss_;
};

inline bool in_admissible_set(const ModulusField& gamma, const Bounds& b, bool elastic) {
  const auto& s = gamma.storage();
  const auto& l = gamma.loss();
  if (!(b.storage_min > 0.0)) return false;
  if (s.size() > 0 && (s.minCoeff() < b.storage_min || s.maxCoeff() > b.storage_max)) return false;
  if (elastic) return l.size() == 0 || l.isZero(0.0);
  if (!(b.loss_min > 0.0)) return false;
  return l.size() == 0 || (l.minCoeff() >= b.loss_min && l.maxCoeff() <= b.loss_max);
}

/// Two homogeneous layers: layer 1 above the interface, layer 2 below (Pa).
struct LayeredParams {
  double storage1 = 0.0;
  double loss1 = 0.0;
  double storage2 = 0.0;
  double loss2 = 0.0;

  Complex gamma1() const { return {storage1, loss1}; }
  Complex gamma2() const { return {storage2, loss2}; }

  /// (G'1, G''1, G'2, G''2)
  std::array<double, 4> as_array() const { return {storage1, loss1, storage2, loss2}; }
  static LayeredParams from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  bool within(const Bounds& b, bool elastic) const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(storage1, b.storage_min, b.storage_max) || !in(storage2, b.storage_min, b.storage_max)) {
      return false;
    }
    if (elastic) return loss1 == 0.0 && loss2 == 0.0;
    return in(loss1, b.loss_min, b.loss_max) && in(loss2, b.loss_min, b.loss_max);
  }

  /// Cells in rows at or above the interface row belong to layer 1.
  ModulusField expand(const Grid& grid) const {
    if (!grid.interface_row) throw Error(ErrorCode::GridMismatch, "layered expansion needs an interface row");
    ModulusField m(grid);
    const int jl = *grid.interface_row;
    for (int cj = 0; cj < grid.ny - 1; ++cj) {
      const bool upper = cj >= jl;
      for (int ci = 0; ci < grid.nx - 1; ++ci) {
        const int c = grid.cell_index(ci, cj);
        m.storage()[c] = upper ? storage1 : storage2;
        m.loss()[c] = upper ? loss1 : loss2;
      }
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// Quadrature and norms

/// Trapezoidal node weight: hx*hy, halved on edges, quartered at corners.
inline double trapezoid_weight(const Grid& g, int i, int j) {
  double w = g.hx * g.hy;
  if (i == 0 || i == g.nx - 1) w *= 0.5;
  if (j == 0 || j == g.ny - 1) w *= 0.5;
  return w;
}

inline Eigen::VectorXd trapezoid_weights(const Grid& g) {
  Eigen::VectorXd w(g.num_nodes());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w[g.node_index(i, j)] = trapezoid_weight(g, i, j);
  return w;
}

/// Nodal partial derivatives: centered in the interior, one-sided on the
/// boundary. Exact for affine fields.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXcd> nodal_gradient(const WaveField& u) {
  const Grid& g = u.grid();
  Eigen::VectorXcd dx(g.num_nodes()), dy(g.num_nodes());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int ia = std::max(i - 1, 0), ib = std::min(i + 1, g.nx - 1);
      const int ja = std::max(j - 1, 0), jb = std::min(j + 1, g.ny - 1);
      dx[g.node_index(i, j)] = (u(ib, j) - u(ia, j)) / (g.hx * (ib - ia));
      dy[g.node_index(i, j)] = (u(i, jb) - u(i, ja)) / (g.hy * (jb - ja));
    }
  }
  return {std::move(dx), std::move(dy)};
}

inline double l2_norm(const WaveField& u) {
  const Eigen::VectorXd w = trapezoid_weights(u.grid());
  return std::sqrt((w.array() * u.values().array().abs2()).sum());
}

/// Conjugate-linear in the first argument.
inline Complex l2_inner(const WaveField& u, const WaveField& v) {
  u.require_same(v);
  const Eigen::VectorXd w = trapezoid_weights(u.grid());
  return (w.array().cast<Complex>() * u.values().array().conjugate() * v.values().array()).sum();
}

/// Conjugate-linear in the first argument.
inline Complex h1_inner(const WaveField& u, const WaveField& v) {
  u.require_same(v);
  const Eigen::VectorXd w = trapezoid_weights(u.grid());
  const auto [ux, uy] = nodal_gradient(u);
  const auto [vx, vy] = nodal_gradient(v);
  const Eigen::ArrayXcd integrand = u.values().array().conjugate() * v.values().array() +
                                    ux.array().conjugate() * vx.array() +
                                    uy.array().conjugate() * vy.array();
  return (w.array().cast<Complex>() * integrand).sum();
}

inline double h1_norm(const WaveField& u) { return std::sqrt(std::max(0.0, h1_inner(u, u).real())); }

/// Norm used for the data space of the inversion.
enum class DataNorm { h1, l2 };

inline Complex data_inner(const WaveField& u, const WaveField& v, DataNorm norm) {
  return norm == DataNorm::h1 ? h1_inner(u, v) : l2_inner(u, v);
}
inline double data_norm(const WaveField& u, DataNorm norm) {
  return norm == DataNorm::h1 ? h1_norm(u) : l2_norm(u);
}

// ---------------------------------------------------------------------------
// Noise

/// u + e with e white complex Gaussian, rescaled so that
/// l2_norm(e) == level * l2_norm(u). Boundary nodes are noised too.
inline WaveField add_relative_noise(const WaveField& u, double level, std::uint64_t seed) {
  if (level < 0.0) throw Error(ErrorCode::InvalidConfig, "noise level must be nonnegative");
  if (level == 0.0) return u;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  WaveField e(u.grid());
  for (Eigen::Index k = 0; k < e.values().size(); ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    e.values()[k] = {re, im};
  }
  const double target = level * l2_norm(u);
  const double raw = l2_norm(e);
  if (target == 0.0 || raw == 0.0) return u;
  e *= target / raw;
  return u + e;
}

/// Discrepancy-principle noise level, measured in H^1.
inline double noise_level_delta(const WaveField& noisy, const WaveField& clean) {
  noisy.require_same(clean);
  return h1_norm(noisy - clean);
}

// ---------------------------------------------------------------------------
// CSV I/O: "nx,ny,hx,hy" then nx*ny rows "i,j,re,im" with j outer.

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  return end && *end == '\0';
}

inline bool parse_int(const std::string& s, int& out) {
  double d = 0.0;
  if (!parse_double(s, d) || d != std::floor(d)) return false;
  out = static_cast<int>(d);
  return true;
}

}  // namespace detail

inline void write_field(const std::string& path, const WaveField& u) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  const Grid& g = u.grid();
  os << g.nx << ',' << g.ny << ',' << detail::format_double(g.hx) << ',' << detail::format_double(g.hy)
     << '\n';
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Complex v = u(i, j);
      os << i << ',' << j << ',' << detail::format_double(v.real()) << ','
         << detail::format_double(v.imag()) << '\n';
    }
  }
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path);
}

inline WaveField read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::MalformedHeader, path + " is empty");
  const auto head = detail::split_csv(line);
  int nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  if (head.size() != 4 || !detail::parse_int(head[0], nx) || !detail::parse_int(head[1], ny) ||
      !detail::parse_double(head[2], hx) || !detail::parse_double(head[3], hy) || nx < 3 || ny < 3 ||
      !(hx > 0.0) || !(hy > 0.0)) {
    throw Error(ErrorCode::MalformedHeader, "expected 'nx,ny,hx,hy' in " + path);
  }
  Grid g = make_grid(nx, ny, hx * (nx - 1), hy * (ny - 1));
  g.hx = hx;
  g.hy = hy;
  WaveField u(g);
  long rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    int i = 0, j = 0;
    double re = 0.0, im = 0.0;
    if (cells.size() != 4 || !detail::parse_int(cells[0], i) || !detail::parse_int(cells[1], j) ||
        !detail::parse_double(cells[2], re) || !detail::parse_double(cells[3], im)) {
      throw Error(ErrorCode::MalformedHeader, "bad row " + std::to_string(rows + 2) + " in " + path);
    }
    if (rows >= g.num_nodes()) {
      throw Error(ErrorCode::RowCountMismatch, path + " has more rows than nx*ny");
    }
    const auto [ei, ej] = g.node_coords(static_cast<int>(rows));
    if (i != ei || j != ej) {
      throw Error(ErrorCode::MalformedHeader, "row order mismatch at row " + std::to_string(rows + 2));
    }
    u.values()[rows] = {re, im};
    ++rows;
  }
  if (rows != g.num_nodes()) {
    throw Error(ErrorCode::RowCountMismatch, path + ": " + std::to_string(rows) + " rows, expected " +
                                                 std::to_string(g.num_nodes()));
  }
  return u;
}

}  // namespace mre
