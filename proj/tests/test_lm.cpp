#include <gtest/gtest.h>

#include <functional>

#include "common.hpp"

using namespace mre;
using namespace mre::testing;

namespace {

Jacobian random_jacobian(const Grid& g, int m, std::uint64_t seed) {
  std::vector<WaveField> cols;
  for (int k = 0; k < m; ++k) cols.push_back(random_field(g, seed + k));
  return make_jacobian(std::move(cols), DataNorm::l2);
}

/// Residual with a component J p0 in the range and a small component outside it.
WaveField residual_in_range(const Jacobian& j, double outside) {
  Eigen::VectorXd p0(j.size());
  for (int k = 0; k < j.size(); ++k) p0[k] = 1.0 + k;
  return apply(j, p0) + Complex(outside) * random_field(j.grid(), 999);
}

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidConfig;
}

struct Problem {
  Grid grid;
  LayeredForwardModel model;
  LayeredParams truth;
  WaveField exact;

  Problem(int n, double hz, bool elastic)
      : grid(benchmark_grid(n)), model(grid, physics_at(hz)), truth(benchmark(hz, elastic)), exact(model(truth)) {}
};

}  // namespace

TEST(Morozov, ZeroJacobianCannotReachTarget) {
  const Grid g = make_grid(9, 9, 1.0, 1.0);
  const Jacobian j = make_jacobian({WaveField(g), WaveField(g)}, DataNorm::l2);
  EXPECT_EQ(error_of([&] { morozov_alpha(j, random_field(g, 1), 0.9, LMConfig{}); }), ErrorCode::BracketFailure);
}

TEST(Morozov, ZeroResidualIsDegenerate) {
  const Grid g = make_grid(9, 9, 1.0, 1.0);
  const Jacobian j = random_jacobian(g, 2, 1);
  EXPECT_EQ(error_of([&] { morozov_alpha(j, WaveField(g), 0.9, LMConfig{}); }), ErrorCode::DegenerateResidual);
}

TEST(Morozov, RatioHitsTargetWithinTolerance) {
  const Grid g = make_grid(15, 15, 1.0, 1.0);
  for (double q : {0.3, 0.7, 0.95}) {
    const Jacobian j = random_jacobian(g, 4, 10);
    const WaveField r = residual_in_range(j, 0.01);
    LMConfig cfg;
    const MorozovResult m = morozov_alpha(j, r, q, cfg);
    EXPECT_NEAR(m.ratio, q, q * cfg.alpha_tol) << q;
    // The ratio reported from the Gram form agrees with the direct field evaluation.
    const double direct = l2_norm(r - apply(j, m.step)) / l2_norm(r);
    EXPECT_NEAR(direct, m.ratio, 1e-9);
    EXPECT_GE(m.alpha, 0.0);
  }
}

TEST(Morozov, DiscrepancyFunctionIsNondecreasingInAlpha) {
  const Grid g = make_grid(15, 15, 1.0, 1.0);
  const Jacobian j = random_jacobian(g, 4, 20);
  const WaveField r = residual_in_range(j, 0.3);
  const Eigen::VectorXd grad = gradient(j, r);
  detail::MorozovFunction f{j.gram, grad, std::pow(l2_norm(r), 2)};
  double last = 0.0;
  for (double la = -8.0; la <= 8.0; la += 0.25) {
    const double v = f.phi(std::pow(10.0, la));
    EXPECT_GE(v, last - 1e-12);
    last = v;
  }
  EXPECT_NEAR(f.phi(1e30), l2_norm(r), 1e-9 * l2_norm(r));
}

TEST(Config, InvalidSettingsAreRejected) {
  auto bad = [](auto mutate) {
    LMConfig c;
    mutate(c);
    return error_of([&] { c.validate(); });
  };
  EXPECT_NO_THROW(LMConfig{}.validate());
  EXPECT_EQ(bad([](LMConfig& c) { c.q = 1.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.q = 0.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.tau = 1.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.alpha_min = 0.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.alpha_tol = 0.5; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.noise_delta = -1.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](LMConfig& c) { c.bounds.storage_max = 0.5 * c.bounds.storage_min; }), ErrorCode::InvalidConfig);
}

TEST(Projection, ClampsComponentwiseAndReportsMovement) {
  const Bounds b;
  LayeredParams p{5e5, 0.1, 500.0, 2e4};
  EXPECT_TRUE(project(p, b, false));
  EXPECT_EQ(p.storage1, b.storage_max);
  EXPECT_EQ(p.loss1, b.loss_min);
  EXPECT_EQ(p.storage2, b.storage_min);
  EXPECT_EQ(p.loss2, b.loss_max);
  EXPECT_FALSE(project(p, b, false));
  LayeredParams e{2e4, 50.0, 1e4, 30.0};
  EXPECT_TRUE(project(e, b, true));
  EXPECT_EQ(e.loss1, 0.0);
  EXPECT_EQ(e.loss2, 0.0);
}

TEST(Driver, InitialOutsideBoxIsRejected) {
  const Problem pr(31, 20, false);
  const LevenbergMarquardt lm(pr.model, LMConfig{}, pr.truth);
  EXPECT_EQ(error_of([&] { lm.start({2e5, 50.0, 1e4, 50.0}, pr.exact); }), ErrorCode::InitialOutsideAdmissibleSet);
}

TEST(Driver, ExactDataAtInitialGuessStopsImmediately) {
  const Problem pr(31, 20, false);
  const LevenbergMarquardt lm(pr.model, LMConfig{}, pr.truth);
  const RunResult r = lm.run(pr.truth, pr.exact);
  EXPECT_EQ(r.k_star, 0);
  EXPECT_EQ(r.stop_reason, StopReason::Stagnation);
  EXPECT_TRUE(r.history.empty());
}

TEST(Driver, FirstStepReducesResidual) {
  const Problem pr(31, 250, false);
  const LayeredParams start{22e3, 1.2 * pr.truth.loss1, 9e3, 0.8 * pr.truth.loss2};
  const LevenbergMarquardt lm(pr.model, LMConfig{}, start);
  LMState st = lm.start(start, pr.exact);
  const IterationRecord rec = lm.step(st, pr.exact);
  EXPECT_LT(rec.residual_after, rec.residual);
  EXPECT_EQ(st.k, 1);
  EXPECT_FALSE(rec.saturated);
  EXPECT_NEAR(rec.morozov_ratio, LMConfig{}.q, 0.01 * LMConfig{}.q);
}

TEST(Driver, ProjectionEngagesAtTheBoxEdge) {
  const Problem pr(31, 20, true);
  LMConfig cfg;
  cfg.elastic = true;
  cfg.bounds.storage_max = 15e3;  // true upper-layer modulus lies outside
  const LayeredParams start{14e3, 0.0, 12e3, 0.0};
  cfg.max_iter = 30;
  const RunResult r = LevenbergMarquardt(pr.model, cfg, start).run(start, pr.exact);
  bool projected = false;
  for (const auto& h : r.history) {
    projected = projected || h.projected;
    EXPECT_TRUE(h.params_after.within(cfg.bounds, true));
  }
  EXPECT_TRUE(projected);
  EXPECT_EQ(r.final_params.storage1, cfg.bounds.storage_max);
}

TEST(Driver, NoisyRunSatisfiesStoppingRuleAndMorozovTargets) {
  const Problem pr(61, 20, false);
  const WaveField data = add_relative_noise(pr.exact, 0.05, 3);
  LMConfig cfg;
  cfg.noise_delta = l2_norm(data - pr.exact);
  const LayeredParams start{25e3, 1.2 * pr.truth.loss1, 12e3, 1.2 * pr.truth.loss2};
  const RunResult r = LevenbergMarquardt(pr.model, cfg, start).run(start, data);
  ASSERT_EQ(r.stop_reason, StopReason::Discrepancy);
  ASSERT_EQ(static_cast<int>(r.residuals.size()), r.k_star + 1);
  for (int k = 0; k < r.k_star; ++k) EXPECT_GT(r.residuals[k], cfg.tau * cfg.noise_delta);
  EXPECT_LE(r.residuals.back(), cfg.tau * cfg.noise_delta);
  for (const auto& h : r.history) {
    if (!h.saturated) {
      EXPECT_NEAR(h.morozov_ratio, cfg.q, cfg.q * cfg.alpha_tol);
    }
    EXPECT_TRUE(h.params_after.within(cfg.bounds, false));
    EXPECT_GT(h.alpha, 0.0);
  }
  EXPECT_GT(r.k_star, 0);
}

TEST(Driver, ExactDataParameterErrorDecreases) {
  const Problem pr(61, 20, true);
  LMConfig cfg;
  cfg.elastic = true;
  cfg.max_iter = 40;
  const LayeredParams start{24e3, 0.0, 12e3, 0.0};
  const RunResult r = LevenbergMarquardt(pr.model, cfg, start).run(start, pr.exact);
  auto err = [&](const LayeredParams& p) { return sup_norm(difference(p, pr.truth)); };
  double last = err(start);
  for (const auto& h : r.history) {
    EXPECT_LE(err(h.params_after), last * (1.0 + 1e-9)) << h.k;
    last = err(h.params_after);
  }
  EXPECT_LT(last, 0.2 * err(start));
}

TEST(Driver, HugeNoiseAcceptsTheInitialGuess) {
  // tau delta exceeds the initial residual once the initial misfit is
  // below sqrt(tau^2 - 1) delta.
  const Problem pr(31, 20, true);
  const WaveField data = add_relative_noise(pr.exact, 2.0, 4);
  LMConfig cfg;
  cfg.elastic = true;
  cfg.noise_delta = l2_norm(data - pr.exact);
  const LayeredParams start{21e3, 0.0, 9.5e3, 0.0};
  const RunResult r = LevenbergMarquardt(pr.model, cfg, start).run(start, data);
  EXPECT_EQ(r.k_star, 0);
  EXPECT_EQ(r.stop_reason, StopReason::Discrepancy);
}

TEST(Driver, MaxIterIsHonoured) {
  const Problem pr(31, 20, true);
  LMConfig cfg;
  cfg.elastic = true;
  cfg.max_iter = 2;
  const LayeredParams start{30e3, 0.0, 30e3, 0.0};
  const RunResult r = LevenbergMarquardt(pr.model, cfg, start).run(start, pr.exact);
  EXPECT_EQ(r.k_star, 2);
  EXPECT_EQ(r.stop_reason, StopReason::MaxIter);
  EXPECT_EQ(to_string(r.stop_reason), "MaxIter");
}
