#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "mre/error.hpp"
#include "mre/field.hpp"
#include "mre/model.hpp"
#include "mre/sensitivity.hpp"

namespace mre {

/// Defaults: q close to 1 keeps the first steps from a far initial guess
/// inside the basin at 20 Hz (q <= 0.86 overshoots to the box edge there)
/// and lets tau = 1.06 sit close to 1, which bounds the data misfit left at
/// the discrepancy stop. Each noise halving then costs about
/// ln 2 / ln(1/q) ~= 13.5 extra iterations.
struct LMConfig {
  double q = 0.95;
  double tau = 1.06;
  double alpha_min = 1e-12;
  double alpha_max = 1e12;
  double alpha_tol = 1e-3;
  int max_bisection = 60;
  int max_iter = 100;
  /// Data-space noise level; zero selects the exact-data stopping rule.
  double noise_delta = 0.0;
  double exact_data_tol = 1e-10;
  double step_tol = 1e-12;
  int stagnation_window = 3;
  bool elastic = false;
  Bounds bounds;
  /// Data-space norm for residuals, Morozov targets and the noise level.
  /// With white measurement noise the H1 noise level is dominated by the
  /// noise gradient and exceeds typical initial residuals, so the stopping
  /// rule would accept the initial guess; L2 is the default.
  DataNorm norm = DataNorm::l2;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (!(q > 0.0 && q < 1.0)) fail("q must lie in (0, 1)");
    if (!(tau * q > 1.0)) fail("tau must exceed 1/q");
    if (!(alpha_min > 0.0 && alpha_min < alpha_max)) fail("need 0 < alpha_min < alpha_max");
    if (!(alpha_tol > 0.0 && alpha_tol < 0.1)) fail("alpha_tol must lie in (0, 0.1)");
    if (max_iter < 0 || max_bisection < 1) fail("iteration limits must be positive");
    if (noise_delta < 0.0) fail("noise_delta must be nonnegative");
    if (stagnation_window < 1) fail("stagnation_window must be >= 1");
    if (!(bounds.storage_min > 0.0 && bounds.storage_min < bounds.storage_max)) fail("bad storage bounds");
    if (!elastic && !(bounds.loss_min > 0.0 && bounds.loss_min < bounds.loss_max)) fail("bad loss bounds");
  }
};

struct MorozovResult {
  double alpha = 0.0;
  Eigen::VectorXd step;
  /// phi(alpha) / ||r|| from the Gram representation.
  double ratio = 0.0;
  int evaluations = 0;
};

namespace detail {

/// phi(alpha)^2 = ||r - J h||^2 via the Gram form, h = (G + alpha I)^{-1} g.
struct MorozovFunction {
  const Eigen::MatrixXd& gram;
  const Eigen::VectorXd& grad;
  double r2;
  int evaluations = 0;

  Eigen::VectorXd step(double alpha) {
    ++evaluations;
    const Eigen::Index m = gram.rows();
    const Eigen::MatrixXd a = gram + alpha * Eigen::MatrixXd::Identity(m, m);
    if (alpha > 0.0) return a.ldlt().solve(grad);
    return a.completeOrthogonalDecomposition().solve(grad);
  }
  double phi(const Eigen::VectorXd& h) const {
    const double v = r2 - 2.0 * h.dot(grad) + h.dot(gram * h);
    return std::sqrt(std::max(v, 0.0));
  }
  double phi(double alpha) { return phi(step(alpha)); }
};

}  // namespace detail

/// Solve ||r - J h_alpha|| = q ||r|| for alpha, with
/// h_alpha = (J^* M J + alpha I)^{-1} J^* M r. phi is nondecreasing in alpha,
/// so the root is bracketed and bisected on log(alpha).
///
/// Throws BracketFailure when even the least-squares step cannot reach the
/// target, which happens when ||r|| is already close to the part of the
/// residual outside the range of J.
inline MorozovResult morozov_alpha(const Jacobian& j, const WaveField& residual, double q, const LMConfig& cfg) {
  const double r2 = j.weight * std::pow(data_norm(residual, j.norm), 2);
  if (!(r2 > 0.0)) throw Error(ErrorCode::DegenerateResidual, "residual is zero");
  const Eigen::VectorXd g = gradient(j, residual);
  detail::MorozovFunction f{j.gram, g, r2};
  const double target = q * std::sqrt(r2);

  if (f.phi(0.0) > target) {
    throw Error(ErrorCode::BracketFailure, "least-squares residual ratio " +
                                               std::to_string(f.phi(0.0) / std::sqrt(r2)) + " exceeds q");
  }
  double lo = cfg.alpha_min, hi = cfg.alpha_max;
  for (int n = 0; f.phi(hi) < target; ++n) {
    if (n > 40) throw Error(ErrorCode::BracketFailure, "cannot bracket from above");
    hi *= 1e4;
  }
  for (int n = 0; f.phi(lo) > target; ++n) {
    if (n > 40) throw Error(ErrorCode::BracketFailure, "cannot bracket from below");
    lo *= 1e-4;
  }

  double llo = std::log(lo), lhi = std::log(hi);
  double alpha = std::exp(0.5 * (llo + lhi));
  Eigen::VectorXd h = f.step(alpha);
  for (int it = 0; it < cfg.max_bisection; ++it) {
    const double ratio = f.phi(h) / target;
    if (std::abs(ratio - 1.0) <= 0.5 * cfg.alpha_tol) break;
    if (ratio > 1.0) {
      lhi = std::log(alpha);
    } else {
      llo = std::log(alpha);
    }
    alpha = std::exp(0.5 * (llo + lhi));
    h = f.step(alpha);
  }
  MorozovResult out;
  out.alpha = alpha;
  out.step = h;
  out.ratio = f.phi(h) / std::sqrt(r2);
  out.evaluations = f.evaluations;
  return out;
}

struct IterationRecord {
  int k = 0;
  LayeredParams params_before;
  LayeredParams params_after;
  /// Data-space residual at params_before.
  double residual = 0.0;
  double residual_after = 0.0;
  double alpha = 0.0;
  /// ||r - J h|| / ||r||, evaluated directly on the fields.
  double morozov_ratio = 0.0;
  double step_norm = 0.0;
  bool projected = false;
  /// No alpha met the Morozov target; alpha_min was used instead.
  bool saturated = false;
};

enum class StopReason { Discrepancy, Stagnation, MaxIter, BracketFailure };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Discrepancy: return "Discrepancy";
    case StopReason::Stagnation: return "Stagnation";
    case StopReason::MaxIter: return "MaxIter";
    case StopReason::BracketFailure: return "BracketFailure";
  }
  return "Unknown";
}

/// Current iterate with its forward solution.
struct LMState {
  int k = 0;
  LayeredParams params;
  LayeredForwardModel::Evaluation eval;
  double residual = 0.0;
};

struct RunResult {
  LayeredParams final_params;
  std::vector<IterationRecord> history;
  /// Data-space residual of every iterate 0..k_star.
  std::vector<double> residuals;
  StopReason stop_reason = StopReason::MaxIter;
  int k_star = 0;
  double noise_delta = 0.0;
};

/// Componentwise clamp onto the admissible box. Returns true if any
/// component moved.
inline bool project(LayeredParams& p, const Bounds& b, bool elastic) {
  auto a = p.as_array();
  const auto before = a;
  a[0] = std::clamp(a[0], b.storage_min, b.storage_max);
  a[2] = std::clamp(a[2], b.storage_min, b.storage_max);
  if (elastic) {
    a[1] = a[3] = 0.0;
  } else {
    a[1] = std::clamp(a[1], b.loss_min, b.loss_max);
    a[3] = std::clamp(a[3], b.loss_min, b.loss_max);
  }
  p = LayeredParams::from_array(a);
  return a != before;
}

class LevenbergMarquardt {
 public:
  /// Parameters are scaled by `reference`, normally the initial guess.
  LevenbergMarquardt(const LayeredForwardModel& model, LMConfig cfg, const LayeredParams& reference)
      : model_(model), cfg_(cfg), map_(cfg.elastic, reference) {
    cfg_.validate();
  }

  const ParameterMap& parameter_map() const { return map_; }
  const LMConfig& config() const { return cfg_; }

  LMState start(const LayeredParams& initial, const WaveField& data) const {
    if (!initial.within(cfg_.bounds, cfg_.elastic)) {
      throw Error(ErrorCode::InitialOutsideAdmissibleSet, "initial guess outside the admissible box");
    }
    auto eval = model_.evaluate(initial);
    const double res = data_norm(data - eval.data, cfg_.norm);
    return LMState{0, initial, std::move(eval), res};
  }

  /// One Levenberg-Marquardt step from `state`; `state` advances to the
  /// projected iterate and its fresh forward solution.
  IterationRecord step(LMState& state, const WaveField& data) const {
    IterationRecord rec;
    rec.k = state.k;
    rec.params_before = state.params;
    rec.residual = state.residual;

    const WaveField r = data - state.eval.data;
    const double data_scale = data_norm(data, cfg_.norm);
    const double weight = data_scale > 0.0 ? 1.0 / (data_scale * data_scale) : 1.0;
    const Jacobian jac = assemble_jacobian(model_, state.eval, map_, cfg_.norm, weight);

    Eigen::VectorXd h;
    if (state.residual == 0.0) {
      h = Eigen::VectorXd::Zero(map_.size());
    } else {
      try {
        const MorozovResult m = morozov_alpha(jac, r, cfg_.q, cfg_);
        rec.alpha = m.alpha;
        h = m.step;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BracketFailure) throw;
        rec.saturated = true;
        rec.alpha = cfg_.alpha_min;
        const Eigen::MatrixXd a =
            jac.gram + cfg_.alpha_min * Eigen::MatrixXd::Identity(map_.size(), map_.size());
        h = a.ldlt().solve(gradient(jac, r));
      }
      rec.morozov_ratio = data_norm(r - apply(jac, h), cfg_.norm) / state.residual;
    }
    if (!h.allFinite()) throw Error(ErrorCode::NonFiniteStep, "step has nonfinite entries");

    LayeredParams next = map_.to_params(map_.to_scaled(state.params) + h);
    rec.projected = project(next, cfg_.bounds, cfg_.elastic);
    rec.params_after = next;
    rec.step_norm = (map_.to_scaled(next) - map_.to_scaled(state.params)).norm();

    auto eval = model_.evaluate(next);
    const double res = data_norm(data - eval.data, cfg_.norm);
    rec.residual_after = res;
    state = LMState{state.k + 1, next, std::move(eval), res};
    return rec;
  }

  RunResult run(const LayeredParams& initial, const WaveField& data) const {
    RunResult out;
    out.noise_delta = cfg_.noise_delta;
    LMState state = start(initial, data);
    const bool noisy = cfg_.noise_delta > 0.0;
    const double data_scale = data_norm(data, cfg_.norm);
    int quiet_steps = 0;

    out.residuals.push_back(state.residual);
    while (true) {
      if (noisy && state.residual <= cfg_.tau * cfg_.noise_delta) {
        out.stop_reason = StopReason::Discrepancy;
        break;
      }
      if (!noisy && state.residual <= cfg_.exact_data_tol * data_scale) {
        out.stop_reason = StopReason::Stagnation;
        break;
      }
      if (state.k >= cfg_.max_iter) {
        out.stop_reason = StopReason::MaxIter;
        break;
      }
      LMState trial = state;
      IterationRecord rec = step(trial, data);
      if (rec.saturated && !(rec.residual_after < rec.residual)) {
        // The linearization has run out of progress; keep the better iterate.
        out.history.push_back(rec);
        out.stop_reason = StopReason::BracketFailure;
        break;
      }
      const double rel_step = rec.step_norm / std::max(map_.to_scaled(rec.params_before).norm(), 1e-300);
      out.history.push_back(rec);
      state = std::move(trial);
      out.residuals.push_back(state.residual);
      quiet_steps = rel_step <= cfg_.step_tol ? quiet_steps + 1 : 0;
      if (!noisy && quiet_steps >= cfg_.stagnation_window) {
        out.stop_reason = StopReason::Stagnation;
        break;
      }
    }
    out.final_params = state.params;
    out.k_star = state.k;
    return out;
  }

 private:
  const LayeredForwardModel& model_;
  LMConfig cfg_;
  ParameterMap map_;
};

}  // namespace mre
