#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/mesh.hpp"

namespace mre {

/// Rectangle and boundary excitation of the two-layer problem (SI units).
/// The top edge carries amplitude * sin(pi x / x_extent); the other edges
/// are clamped to zero. Layer 1 occupies x_L < y < y_extent.
struct TwoLayerGeometry {
  double x_extent = 0.120;
  double y_extent = 0.120;
  double x_L = 0.060;
  double amplitude = 0.02e-3;
};

/// Sign of the lateral term inside the wavenumber radicand.
///  pde:     beta^2 = rho w^2 / G - (pi/L)^2, what substitution of
///           v(y) sin(pi x/L) into G Lap u + rho w^2 u = 0 yields;
///  flipped: beta^2 = rho w^2 / G + (pi/L)^2.
enum class DispersionSign { pde, flipped };

/// Interface flux row of the 4x4 coefficient system.
///  physical: gamma_1 v_1' = gamma_2 v_2' at the interface;
///  unweighted: v_1' = v_2' (modulus factors dropped).
enum class FluxRow { physical, unweighted };

/// Layer wavenumber, branch chosen with Im(beta) >= 0.
inline Complex dispersion(Complex modulus, double rho, double omega, double x_extent,
                          DispersionSign sign = DispersionSign::pde) {
  if (std::abs(modulus) == 0.0) throw Error(ErrorCode::ZeroModulus, "layer modulus is zero");
  const double lateral = std::numbers::pi / x_extent;
  const Complex radicand = rho * omega * omega / modulus +
                           (sign == DispersionSign::pde ? -1.0 : 1.0) * lateral * lateral;
  Complex beta = std::sqrt(radicand);
  if (beta.imag() < 0.0) beta = -beta;
  return beta;
}

/// v(y) = c1 e^{i b1 y} + c2 e^{-i b1 y} above x_L and d1 e^{i b2 y} + d2 e^{-i b2 y}
/// below; u(x, y) = amplitude * v(y) * sin(pi x / x_extent).
struct TwoLayerSolution {
  Complex beta1, beta2;
  Complex c1, c2, d1, d2;
  Complex gamma1, gamma2;
  TwoLayerGeometry geometry;

  Complex v(double y) const {
    const Complex i(0.0, 1.0);
    if (y > geometry.x_L) return c1 * std::exp(i * beta1 * y) + c2 * std::exp(-i * beta1 * y);
    return d1 * std::exp(i * beta2 * y) + d2 * std::exp(-i * beta2 * y);
  }

  /// dv/dy, taken from the layer on the requested side of the interface.
  Complex dv(double y, bool upper_side) const {
    const Complex i(0.0, 1.0);
    if (upper_side) return i * beta1 * (c1 * std::exp(i * beta1 * y) - c2 * std::exp(-i * beta1 * y));
    return i * beta2 * (d1 * std::exp(i * beta2 * y) - d2 * std::exp(-i * beta2 * y));
  }
  Complex dv(double y) const { return dv(y, y > geometry.x_L); }

  double lateral(double x) const {
    return geometry.amplitude * std::sin(std::numbers::pi * x / geometry.x_extent);
  }

  Complex value(double x, double y) const { return v(y) * lateral(x); }

  /// (du/dx, du/dy)
  std::pair<Complex, Complex> gradient(double x, double y) const {
    const double k = std::numbers::pi / geometry.x_extent;
    const double dlat = geometry.amplitude * k * std::cos(k * x);
    return {v(y) * dlat, dv(y) * lateral(x)};
  }
};

inline TwoLayerSolution solve_transmission(const LayeredParams& params, double rho, double omega,
                                           const TwoLayerGeometry& geom = {},
                                           FluxRow flux = FluxRow::physical,
                                           DispersionSign sign = DispersionSign::pde) {
  TwoLayerSolution s;
  s.geometry = geom;
  s.gamma1 = params.gamma1();
  s.gamma2 = params.gamma2();
  s.beta1 = dispersion(s.gamma1, rho, omega, geom.x_extent, sign);
  s.beta2 = dispersion(s.gamma2, rho, omega, geom.x_extent, sign);

  const Complex i(0.0, 1.0);
  const Complex b1 = s.beta1, b2 = s.beta2;
  const double top = geom.y_extent, xl = geom.x_L;
  const Complex f1 = flux == FluxRow::physical ? s.gamma1 : Complex(1.0);
  const Complex f2 = flux == FluxRow::physical ? s.gamma2 : Complex(1.0);
  const Complex e1p = std::exp(i * b1 * xl), e1m = std::exp(-i * b1 * xl);
  const Complex e2p = std::exp(i * b2 * xl), e2m = std::exp(-i * b2 * xl);

  Eigen::Matrix4cd m;
  m << std::exp(i * b1 * top), std::exp(-i * b1 * top), 0.0, 0.0,  //
      e1p, e1m, -e2p, -e2m,                                        //
      f1 * b1 * e1p, -f1 * b1 * e1m, -f2 * b2 * e2p, f2 * b2 * e2m,   //
      0.0, 0.0, 1.0, 1.0;
  const Eigen::Vector4cd rhs(1.0, 0.0, 0.0, 0.0);

  Eigen::PartialPivLU<Eigen::Matrix4cd> lu(m);
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorCode::DegenerateTransmission, "transmission matrix is singular (rcond " +
                                                       std::to_string(lu.rcond()) + ")");
  }
  const Eigen::Vector4cd c = lu.solve(rhs);
  if (!c.allFinite()) throw Error(ErrorCode::DegenerateTransmission, "nonfinite coefficients");
  s.c1 = c[0];
  s.c2 = c[1];
  s.d1 = c[2];
  s.d2 = c[3];
  return s;
}

inline bool matches_geometry(const Grid& g, const TwoLayerGeometry& geom) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  return close(g.x_extent, geom.x_extent) && close(g.y_extent, geom.y_extent);
}

inline WaveField evaluate(const TwoLayerSolution& sol, const Grid& grid) {
  if (!matches_geometry(grid, sol.geometry)) {
    throw Error(ErrorCode::GridMismatch, "grid extents differ from the analytic solution's domain");
  }
  WaveField u(grid);
  for (int j = 0; j < grid.ny; ++j) {
    const Complex vj = j == grid.ny - 1 ? Complex(1.0) : (j == 0 ? Complex(0.0) : sol.v(grid.y(j)));
    for (int i = 0; i < grid.nx; ++i) {
      // The lateral factor vanishes exactly on the side edges.
      const double lat = (i == 0 || i == grid.nx - 1) ? 0.0 : sol.lateral(grid.x(i));
      u(i, j) = vj * lat;
    }
  }
  return u;
}

/// Boundary data shared by the analytic and discrete problems: the top
/// excitation, zero elsewhere. Interior values are zero.
inline WaveField dirichlet_data(const Grid& grid, const TwoLayerGeometry& geom) {
  WaveField g(grid);
  for (int i = 1; i < grid.nx - 1; ++i) {
    g(i, grid.ny - 1) = geom.amplitude * std::sin(std::numbers::pi * grid.x(i) / geom.x_extent);
  }
  return g;
}

}  // namespace mre
