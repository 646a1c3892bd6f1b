#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "common.hpp"

using namespace mre;
using mre::testing::random_field;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mre_field_" + name)).string();
}

WaveField affine_x(const Grid& g) {
  WaveField u(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u(i, j) = g.x(i);
  return u;
}

/// Composite trapezoid rule in one dimension.
double trapezoid_1d(const std::vector<double>& f, double h) {
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
  return s * h;
}

}  // namespace

TEST(Norms, ConstantFieldIntegratesExactly) {
  const Grid g = make_grid(7, 5, 0.3, 0.2);
  WaveField u(g);
  u.values().setConstant(Complex(3.0, -4.0));
  EXPECT_NEAR(l2_norm(u), 5.0 * std::sqrt(0.3 * 0.2), 1e-13);
  EXPECT_NEAR(h1_norm(u), l2_norm(u), 1e-13);
}

TEST(Norms, AffineFieldOnUnitSquare) {
  // The trapezoid rule integrates x^2 with error h^2/6 on [0, 1]; the
  // gradient is exactly 1 everywhere.
  for (int n : {5, 11, 41}) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const double h = g.hx;
    const double expected = 1.0 / 3.0 + h * h / 6.0 + 1.0;
    EXPECT_NEAR(h1_norm(affine_x(g)) * h1_norm(affine_x(g)), expected, 1e-12) << n;
  }
}

TEST(Norms, SeparableProductMatchesOneDimensionalRules) {
  const Grid g = mre::testing::benchmark_grid(61);
  const auto sol = solve_transmission(mre::testing::benchmark(250), 1000.0, mre::testing::omega_of(250));
  const WaveField u = evaluate(sol, g);
  std::vector<double> fy, fx;
  for (int j = 0; j < g.ny; ++j) fy.push_back(std::norm(u(g.nx / 2, j)) / std::pow(sol.lateral(g.x(g.nx / 2)), 2));
  for (int i = 0; i < g.nx; ++i) fx.push_back(std::pow(sol.lateral(g.x(i)), 2));
  const double oracle = trapezoid_1d(fx, g.hx) * trapezoid_1d(fy, g.hy);
  EXPECT_NEAR(l2_norm(u) * l2_norm(u), oracle, 1e-12 * oracle);
  // The trapezoid rule is exact for sin^2 over a full period on this grid.
  EXPECT_NEAR(trapezoid_1d(fx, g.hx), 0.5 * 0.12 * std::pow(2e-5, 2), 1e-24);
}

TEST(Norms, AxiomsOnRandomFields) {
  const Grid g = make_grid(9, 7, 1.0, 0.5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const WaveField u = random_field(g, 2 * s), v = random_field(g, 2 * s + 1);
    const Complex a(0.7, -1.3);
    for (auto norm : {DataNorm::l2, DataNorm::h1}) {
      EXPECT_LE(data_norm(u + v, norm), data_norm(u, norm) + data_norm(v, norm) + 1e-12);
      EXPECT_NEAR(data_norm(a * u, norm), std::abs(a) * data_norm(u, norm), 1e-12 * data_norm(u, norm));
      const Complex uv = data_inner(u, v, norm), vu = data_inner(v, u, norm);
      EXPECT_NEAR(std::abs(uv - std::conj(vu)), 0.0, 1e-12 * std::abs(uv));
    }
    EXPECT_LE(l2_norm(u), h1_norm(u));
  }
}

TEST(Norms, InnerProductIsConjugateLinearInFirstArgument) {
  const Grid g = make_grid(6, 6, 1.0, 1.0);
  const WaveField u = random_field(g, 5), v = random_field(g, 6);
  const Complex a(0.0, 2.0);
  EXPECT_NEAR(std::abs(h1_inner(a * u, v) - std::conj(a) * h1_inner(u, v)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h1_inner(u, a * v) - a * h1_inner(u, v)), 0.0, 1e-12);
}

TEST(Fields, MismatchedGridsAreRejected) {
  const WaveField a(make_grid(4, 4, 1.0, 1.0)), b(make_grid(5, 4, 1.0, 1.0));
  try {
    (void)(a + b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
  EXPECT_THROW(h1_inner(a, b), Error);
  EXPECT_THROW(noise_level_delta(a, b), Error);
}

TEST(Noise, RealizedLevelIsExact) {
  const Grid g = mre::testing::benchmark_grid(121);
  const WaveField u = evaluate(solve_transmission(mre::testing::benchmark(250), 1000.0, mre::testing::omega_of(250)), g);
  for (double level : {0.025, 0.05, 0.1, 0.2}) {
    const WaveField n = add_relative_noise(u, level, 42);
    EXPECT_NEAR(l2_norm(n - u) / l2_norm(u), level, 1e-12) << level;
  }
}

TEST(Noise, SameSeedSameBitsDifferentSeedDifferentBits) {
  const Grid g = make_grid(11, 11, 1.0, 1.0);
  const WaveField u = random_field(g, 1);
  const WaveField a = add_relative_noise(u, 0.2, 7), b = add_relative_noise(u, 0.2, 7), c = add_relative_noise(u, 0.2, 8);
  EXPECT_TRUE(a.values() == b.values());
  EXPECT_FALSE(a.values() == c.values());
}

TEST(Noise, ZeroLevelReturnsInputAndNegativeIsInvalid) {
  const Grid g = make_grid(5, 5, 1.0, 1.0);
  const WaveField u = random_field(g, 3);
  EXPECT_TRUE(add_relative_noise(u, 0.0, 1).values() == u.values());
  EXPECT_THROW(add_relative_noise(u, -0.1, 1), Error);
}

TEST(Noise, DeltaOfIdenticalFieldsIsZero) {
  const Grid g = make_grid(5, 5, 1.0, 1.0);
  const WaveField u = random_field(g, 3);
  EXPECT_EQ(noise_level_delta(u, u), 0.0);
}

TEST(Noise, DeltaOfConstantShiftIsAmplitudeTimesRootArea) {
  const Grid g = make_grid(9, 5, 0.4, 0.1);
  const WaveField u = random_field(g, 3);
  WaveField shifted = u;
  shifted.values().array() += Complex(0.25, 0.0);
  EXPECT_NEAR(noise_level_delta(shifted, u), 0.25 * std::sqrt(0.04), 1e-14);
}

TEST(FieldIo, RoundTripIsBitwise) {
  const Grid g = make_grid(7, 4, 0.12, 0.05);
  WaveField u = random_field(g, 9);
  u(1, 1) = {1e-300, -3.141592653589793};
  const std::string p = temp_path("round.csv");
  write_field(p, u);
  const WaveField r = read_field(p);
  EXPECT_TRUE(r.grid().same_layout(g));
  EXPECT_TRUE(r.values() == u.values());
  std::filesystem::remove(p);
}

TEST(FieldIo, HeaderCarriesGridValues) {
  const std::string p = temp_path("head.csv");
  write_field(p, WaveField(make_grid(3, 4, 2.0, 3.0)));
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "3,4,1,1");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0,0,0");
  std::filesystem::remove(p);
}

namespace {
ErrorCode read_error(const std::string& content) {
  const std::string p = temp_path("bad.csv");
  {
    std::ofstream os(p);
    os << content;
  }
  try {
    read_field(p);
  } catch (const Error& e) {
    std::filesystem::remove(p);
    return e.code();
  }
  std::filesystem::remove(p);
  return ErrorCode::InvalidConfig;
}
}  // namespace

TEST(FieldIo, MalformedInputs) {
  EXPECT_EQ(read_error(""), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("nx,ny,hx,hy\n"), ErrorCode::MalformedHeader);
  EXPECT_EQ(read_error("3,3,1,1\n0,0,0,0\n"), ErrorCode::RowCountMismatch);
  std::string full = "3,3,1,1\n";
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) full += std::to_string(i) + "," + std::to_string(j) + ",1,2\n";
  EXPECT_EQ(read_error(full + "0,0,0,0\n"), ErrorCode::RowCountMismatch);
  EXPECT_EQ(read_error("3,3,1,1\n1,0,0,0\n"), ErrorCode::MalformedHeader);
  try {
    read_field(temp_path("does_not_exist.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Layered, ExpansionAssignsCellsAboveInterfaceToLayerOne) {
  const Grid g = build_grid(5, 5, 0.12, 0.12, 0.06);
  const LayeredParams p{20e3, 50.0, 10e3, 30.0};
  const ModulusField m = p.expand(g);
  for (int cj = 0; cj < 4; ++cj) {
    for (int ci = 0; ci < 4; ++ci) {
      const Complex expected = cj >= 2 ? p.gamma1() : p.gamma2();
      EXPECT_EQ(m.gamma(ci, cj), expected);
    }
  }
  EXPECT_THROW(p.expand(make_grid(5, 5, 1.0, 1.0)), Error);
}

TEST(Layered, AdmissibleBox) {
  const Bounds b;
  EXPECT_TRUE((LayeredParams{20e3, 50.0, 10e3, 30.0}).within(b, false));
  EXPECT_FALSE((LayeredParams{20e3, 0.5, 10e3, 30.0}).within(b, false));
  EXPECT_FALSE((LayeredParams{20e3, 50.0, 10e3, 30.0}).within(b, true));
  EXPECT_TRUE((LayeredParams{20e3, 0.0, 10e3, 0.0}).within(b, true));
  const Grid g = mre::testing::benchmark_grid(31);
  EXPECT_TRUE(in_admissible_set((LayeredParams{20e3, 50.0, 10e3, 30.0}).expand(g), b, false));
  EXPECT_FALSE(in_admissible_set((LayeredParams{2e5, 50.0, 10e3, 30.0}).expand(g), b, false));
}
