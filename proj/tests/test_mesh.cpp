#include <gtest/gtest.h>

#include "common.hpp"

using namespace mre;

TEST(Grid, BenchmarkGridPlacesInterfaceOnRowSixty) {
  const Grid g = build_grid(121, 121, 0.12, 0.12, 0.06);
  EXPECT_DOUBLE_EQ(g.hx, 1e-3);
  EXPECT_DOUBLE_EQ(g.hy, 1e-3);
  ASSERT_TRUE(g.interface_row.has_value());
  EXPECT_EQ(*g.interface_row, 60);
  EXPECT_EQ(g.num_nodes(), 121 * 121);
  EXPECT_EQ(g.num_cells(), 120 * 120);
}

TEST(Grid, CoarseGridsStayAligned) {
  EXPECT_EQ(*build_grid(31, 31, 0.12, 0.12, 0.06).interface_row, 15);
  EXPECT_EQ(*build_grid(61, 61, 0.12, 0.12, 0.06).interface_row, 30);
}

TEST(Grid, InterfaceBetweenRowsIsRejected) {
  try {
    build_grid(100, 100, 0.12, 0.12, 0.06);
    FAIL() << "expected NonAlignedInterface";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonAlignedInterface);
  }
}

TEST(Grid, TooFewNodesIsInvalid) {
  EXPECT_THROW(make_grid(2, 5, 1.0, 1.0), Error);
  EXPECT_THROW(make_grid(5, 5, 0.0, 1.0), Error);
  EXPECT_THROW(build_grid(5, 5, 1.0, 1.0, 1.0), Error);
}

TEST(Grid, NodeNumberingIsRowMajorWithRowsOuter) {
  const Grid g = make_grid(4, 3, 3.0, 2.0);
  EXPECT_EQ(g.node_index(0, 0), 0);
  EXPECT_EQ(g.node_index(3, 0), 3);
  EXPECT_EQ(g.node_index(0, 1), 4);
  for (int k = 0; k < g.num_nodes(); ++k) {
    const auto [i, j] = g.node_coords(k);
    EXPECT_EQ(g.node_index(i, j), k);
  }
  EXPECT_DOUBLE_EQ(g.x(3), 3.0);
  EXPECT_DOUBLE_EQ(g.y(2), 2.0);
}

TEST(Grid, RefinementMapsCoarseNodesAndInterface) {
  const Grid c = build_grid(31, 31, 0.12, 0.12, 0.06);
  const Grid f = refine(c, 3);
  EXPECT_EQ(f.nx, 91);
  EXPECT_EQ(*f.interface_row, 45);
  EXPECT_NEAR(f.hy * 3, c.hy, 1e-15);
  EXPECT_TRUE(refine(c, 1).same_layout(c));
  EXPECT_THROW(refine(c, 0), Error);
}

TEST(BoundaryMask, CountsEdgesWithCornersOnTopAndBottom) {
  const Grid g = make_grid(5, 4, 1.0, 1.0);
  const BoundaryMask m = classify_boundary(g);
  EXPECT_EQ(m.boundary_count(), 2 * 5 + 2 * 4 - 4);
  EXPECT_EQ(m.count(NodeKind::dirichlet_top), 5);
  EXPECT_EQ(m.count(NodeKind::dirichlet_bottom), 5);
  EXPECT_EQ(m.count(NodeKind::dirichlet_left), 2);
  EXPECT_EQ(m.count(NodeKind::dirichlet_right), 2);
  EXPECT_EQ(m.kind(g.node_index(0, 3)), NodeKind::dirichlet_top);
  EXPECT_EQ(m.kind(g.node_index(4, 0)), NodeKind::dirichlet_bottom);
  EXPECT_FALSE(m.is_boundary(g.node_index(2, 1)));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) EXPECT_EQ(m.is_boundary(g.node_index(i, j)), g.on_boundary(i, j));
}
