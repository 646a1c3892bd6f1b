#include <gtest/gtest.h>

#include "common.hpp"

using namespace mre;
using namespace mre::testing;

TEST(ParameterAlgebra, SupNormDifferenceAndAxpy) {
  const LayeredParams a{3.0, 4.0, 1.0, 0.0}, b{1.0, 1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(sup_norm(a), 5.0);
  const LayeredParams d = difference(a, b);
  EXPECT_EQ(d.as_array(), (std::array<double, 4>{2.0, 3.0, 0.0, -1.0}));
  EXPECT_EQ(axpy(b, 2.0, a).as_array(), (std::array<double, 4>{7.0, 9.0, 3.0, 1.0}));
}

TEST(LogLogSlope, RecoversPowerLaw) {
  std::vector<double> x{1e-1, 3e-2, 1e-2, 3e-3}, y;
  for (double v : x) y.push_back(7.0 * std::pow(v, 2.5));
  EXPECT_NEAR(loglog_slope(x, y), 2.5, 1e-12);
}

TEST(Ball, RejectsBadRadiusAndEscapes) {
  const detail::ParameterBall ok{benchmark(20), 0.1, false};
  EXPECT_NO_THROW(ok.check_inside(Bounds{}));
  auto code = [](const detail::ParameterBall& b) {
    try {
      b.check_inside(Bounds{});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NotInAdmissibleSet;
  };
  EXPECT_EQ(code({benchmark(20), 0.0, false}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code({benchmark(20), 1.0, false}), ErrorCode::InvalidConfig);
  EXPECT_EQ(code({LayeredParams{1.05e3, 50.0, 1e4, 30.0}, 0.1, false}), ErrorCode::BallEscapesAdmissibleSet);
}

TEST(Ball, DrawsStayInsideAndRespectElasticity) {
  const LayeredParams base = benchmark(250);
  const detail::ParameterBall ball{base, 0.1, true};
  std::mt19937_64 rng(1);
  for (int n = 0; n < 200; ++n) {
    const LayeredParams p = ball.draw(rng);
    EXPECT_LE(std::abs(p.storage1 / base.storage1 - 1.0), 0.1);
    EXPECT_LE(std::abs(p.storage2 / base.storage2 - 1.0), 0.1);
    EXPECT_EQ(p.loss1, 0.0);
    EXPECT_EQ(p.loss2, 0.0);
  }
}

TEST(Cone, EstimateIsFiniteDeterministicAndValidated) {
  const LayeredForwardModel model(benchmark_grid(31), physics_at(20));
  const LayeredParams base = benchmark(20);
  const ConeEstimate a = estimate_cone_constant(model, base, 0.1, 6, 17, false, Bounds{}, 4);
  const ConeEstimate b = estimate_cone_constant(model, base, 0.1, 6, 17, false, Bounds{}, 4);
  EXPECT_EQ(a.samples.size(), 6u);
  EXPECT_TRUE(std::isfinite(a.c_hat));
  EXPECT_GT(a.c_hat, 0.0);
  EXPECT_EQ(a.c_hat, b.c_hat);
  EXPECT_EQ(a.validation.pairs, 4);
  for (const auto& s : a.samples) {
    EXPECT_LE(s.ratio, a.c_hat);
    EXPECT_NEAR(s.lhs, s.ratio * s.rhs_factor, 1e-12 * s.lhs);
  }
  EXPECT_THROW(estimate_cone_constant(model, base, 0.1, 1, 17, false), Error);
}

TEST(Cone, PairOfIdenticalPointsHasZeroRemainder) {
  const LayeredForwardModel model(benchmark_grid(31), physics_at(20));
  const ConeSample s = detail::cone_sample(model, benchmark(20), benchmark(20));
  EXPECT_EQ(s.lhs, 0.0);
  EXPECT_EQ(s.ratio, 0.0);
}

TEST(Taylor, RemainderIsQuadratic) {
  const LayeredForwardModel model(benchmark_grid(31), physics_at(250));
  const LayeredParams base = benchmark(250);
  const LayeredParams dir{1.0, 0.02, -0.5, 0.01};
  std::vector<double> t;
  for (double f : {1e-1, 3e-2, 1e-2, 3e-3}) t.push_back(f * sup_norm(base) / sup_norm(dir));
  const auto scan = taylor_remainder_scan(model, base, dir, t, false);
  ASSERT_EQ(scan.size(), 4u);
  EXPECT_NEAR(taylor_slope(scan), 2.0, 0.2);
}

TEST(Taylor, LeavingTheBoxIsRejected) {
  const LayeredForwardModel model(benchmark_grid(31), physics_at(20));
  try {
    taylor_remainder_scan(model, benchmark(20), LayeredParams{1.0, 0.0, 0.0, 0.0}, {1e6}, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BallEscapesAdmissibleSet);
  }
}
