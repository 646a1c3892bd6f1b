#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/model.hpp"
#include "mre/sensitivity.hpp"

namespace mre {

/// Sup norm of a layered modulus increment: the largest |dG' + i dG''| over
/// the two layers.
inline double sup_norm(const LayeredParams& d) { return std::max(std::abs(d.gamma1()), std::abs(d.gamma2())); }

inline LayeredParams difference(const LayeredParams& a, const LayeredParams& b) {
  return {a.storage1 - b.storage1, a.loss1 - b.loss1, a.storage2 - b.storage2, a.loss2 - b.loss2};
}

inline LayeredParams axpy(const LayeredParams& base, double t, const LayeredParams& dir) {
  return {base.storage1 + t * dir.storage1, base.loss1 + t * dir.loss1, base.storage2 + t * dir.storage2,
          base.loss2 + t * dir.loss2};
}

/// Least-squares slope of log(y) against log(x). Pairs with a nonpositive
/// coordinate are ignored.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "slope fit: length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) continue;
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw Error(ErrorCode::DimensionMismatch, "slope fit needs two positive points");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConeSample {
  LayeredParams tilde;
  LayeredParams hat;
  /// ||F(tilde) - F(hat) - F'(hat)(tilde - hat)||_H1
  double lhs = 0.0;
  /// ||tilde - hat||_inf * ||F(tilde) - F(hat)||_H1
  double rhs_factor = 0.0;
  double ratio = 0.0;
};

struct ConeValidation {
  int pairs = 0;
  int violations = 0;
  double inflation = 1.5;
  double max_ratio = 0.0;
};

struct ConeEstimate {
  std::vector<ConeSample> samples;
  double c_hat = 0.0;
  double ball_radius = 0.0;
  LayeredParams base_gamma;
  bool elastic = false;
  std::uint64_t seed = 0;
  ConeValidation validation;
};

namespace detail {

/// Box in layered parameter space: each active component within
/// base * (1 +- radius). Loss components stay zero in elastic mode.
struct ParameterBall {
  LayeredParams base;
  double radius;
  bool elastic;

  void check_inside(const Bounds& b) const {
    if (!(radius > 0.0 && radius < 1.0)) throw Error(ErrorCode::InvalidConfig, "ball radius must lie in (0, 1)");
    for (double sign : {-1.0, 1.0}) {
      const auto a = base.as_array();
      std::array<double, 4> corner{};
      for (std::size_t k = 0; k < 4; ++k) corner[k] = a[k] * (1.0 + sign * radius);
      if (!LayeredParams::from_array(corner).within(b, elastic)) {
        throw Error(ErrorCode::BallEscapesAdmissibleSet, "parameter ball leaves the admissible box");
      }
    }
  }

  template <class Rng>
  LayeredParams draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(-radius, radius);
    auto a = base.as_array();
    for (std::size_t k = 0; k < 4; ++k) {
      const bool loss = k == 1 || k == 3;
      if (loss && elastic) {
        a[k] = 0.0;
      } else {
        a[k] *= 1.0 + u(rng);
      }
    }
    return LayeredParams::from_array(a);
  }
};

inline ConeSample cone_sample(const LayeredForwardModel& model, const LayeredParams& tilde,
                              const LayeredParams& hat) {
  const auto at_hat = model.evaluate(hat);
  const WaveField f_tilde = model(tilde);
  const LayeredParams d = difference(tilde, hat);
  const WaveField lin =
      model.restrict_to_data(frechet_apply(at_hat.op, at_hat.fine, d.expand(model.solver_grid())));
  ConeSample s{tilde, hat};
  const WaveField diff = f_tilde - at_hat.data;
  s.lhs = h1_norm(diff - lin);
  s.rhs_factor = sup_norm(d) * h1_norm(diff);
  s.ratio = s.rhs_factor > 0.0 ? s.lhs / s.rhs_factor : 0.0;
  return s;
}

}  // namespace detail

/// Empirical constant of the tangential cone condition on a ball of relative
/// radius `radius` around `base`, from `n_samples` pairs drawn uniformly in
/// the layered parameter box. A second, independent set of `n_validation`
/// pairs is checked against the inflated bound lhs <= 1.5 c_hat rhs_factor.
inline ConeEstimate estimate_cone_constant(const LayeredForwardModel& model, const LayeredParams& base,
                                           double radius, int n_samples, std::uint64_t seed, bool elastic,
                                           const Bounds& bounds = {}, int n_validation = 0) {
  if (n_samples < 2) throw Error(ErrorCode::InvalidConfig, "cone estimate needs at least two samples");
  const detail::ParameterBall ball{base, radius, elastic};
  ball.check_inside(bounds);

  ConeEstimate out;
  out.ball_radius = radius;
  out.base_gamma = base;
  out.elastic = elastic;
  out.seed = seed;

  std::mt19937_64 rng(seed);
  for (int n = 0; n < n_samples; ++n) {
    const LayeredParams tilde = ball.draw(rng);
    const LayeredParams hat = ball.draw(rng);
    if (sup_norm(difference(tilde, hat)) == 0.0) continue;
    out.samples.push_back(detail::cone_sample(model, tilde, hat));
    out.c_hat = std::max(out.c_hat, out.samples.back().ratio);
  }

  out.validation.pairs = n_validation;
  std::mt19937_64 fresh(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int n = 0; n < n_validation; ++n) {
    const LayeredParams tilde = ball.draw(fresh);
    const LayeredParams hat = ball.draw(fresh);
    const ConeSample s = detail::cone_sample(model, tilde, hat);
    out.validation.max_ratio = std::max(out.validation.max_ratio, s.ratio);
    if (s.lhs > out.validation.inflation * out.c_hat * s.rhs_factor) ++out.validation.violations;
  }
  return out;
}

struct TaylorPoint {
  double t = 0.0;
  double remainder_h1 = 0.0;
};

/// ||F(base + t d) - F(base) - t F'(base) d||_H1 for each t.
inline std::vector<TaylorPoint> taylor_remainder_scan(const LayeredForwardModel& model, const LayeredParams& base,
                                                      const LayeredParams& direction,
                                                      const std::vector<double>& t_values, bool elastic,
                                                      const Bounds& bounds = {}) {
  for (double t : t_values) {
    if (!axpy(base, t, direction).within(bounds, elastic)) {
      throw Error(ErrorCode::BallEscapesAdmissibleSet, "Taylor scan leaves the admissible box at t = " +
                                                           std::to_string(t));
    }
  }
  const auto at = model.evaluate(base);
  const WaveField lin =
      model.restrict_to_data(frechet_apply(at.op, at.fine, direction.expand(model.solver_grid())));
  std::vector<TaylorPoint> out;
  out.reserve(t_values.size());
  for (double t : t_values) {
    if (t == 0.0 || sup_norm(direction) == 0.0) {
      out.push_back({t, 0.0});
      continue;
    }
    const WaveField moved = model(axpy(base, t, direction));
    out.push_back({t, h1_norm(moved - at.data - Complex(t) * lin)});
  }
  return out;
}

inline double taylor_slope(const std::vector<TaylorPoint>& scan) {
  std::vector<double> t, r;
  for (const auto& p : scan) {
    t.push_back(std::abs(p.t));
    r.push_back(p.remainder_h1);
  }
  return loglog_slope(t, r);
}

}  // namespace mre
