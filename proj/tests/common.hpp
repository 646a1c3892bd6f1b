#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "mre/mre.hpp"

namespace mre::testing {

inline constexpr double kRho = 1000.0;

inline double omega_of(double hz) { return 2.0 * std::numbers::pi * hz; }

/// Benchmark moduli: G' = 20 / 10 kPa, G'' = 0.4 / 0.3 Pa s times omega.
inline LayeredParams benchmark(double hz, bool elastic = false) {
  const double w = elastic ? 0.0 : omega_of(hz);
  return {20e3, 0.4 * w, 10e3, 0.3 * w};
}

inline Grid benchmark_grid(int n) { return build_grid(n, n, 0.12, 0.12, 0.06); }

inline Physics physics_at(double hz) { return {kRho, omega_of(hz), TwoLayerGeometry{}}; }

inline WaveField random_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  WaveField u(g);
  for (Eigen::Index k = 0; k < u.values().size(); ++k) u.values()[k] = {n(rng), n(rng)};
  return u;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace mre::testing
