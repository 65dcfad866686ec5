#include "support.hpp"

#include <gtest/gtest.h>

using namespace stair;
using namespace stair::testing;

TEST(Split, RandomContract) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 12; ++k) {
    const SplitInstance s = random_instance(rng);
    const SplitResult r = split_cell_detailed(cell_for(s), s.b, s.c, s.lambda, s.cfg);
    const double eps = to_double(s.cfg.eps), eta = to_double(s.cfg.eta), lam = to_double(s.lambda);
    const SplitMeasures m = measure_split(s, r.cells, eps);
    EXPECT_TRUE(m.valid) << "instance " << k;
    EXPECT_GE(m.exact_b, (1 - eps) * lam * (1 - eta) * m.area) << "instance " << k;
    EXPECT_LE(m.near_b, (1 + eps) * lam * m.area + eta * m.area) << "instance " << k;
    EXPECT_LE(m.mismatch, 1e-9) << "instance " << k;
    EXPECT_LE(m.c1, eps) << "instance " << k;
    EXPECT_LE(r.residual_area, eta * m.area * (1 + 1e-12));
  }
}

TEST(Split, StaircaseStageKeepsTags) {
  const StaircaseSchedule s = schedule(1);
  Cell cell;
  cell.region = rectangle({0, 0, 1, 1});
  cell.quad = Quadratic::centered(to_sym(s.A), {0, 0}, {0, 0}, 0);
  SplitConfig cfg;
  cfg.eps = Rational(1, 10);
  cfg.eta = Rational(1, 20);
  const SplitResult r = split_cell_detailed(cell, s.D, s.C, s.horizontal_weight, cfg, {1, Which::D, 1, Which::C, 1});
  bool saw_atom = false, saw_perturbed = false;
  for (const Cell& c : r.cells) {
    if (c.tag.kind == TagKind::Atom) {
      saw_atom = true;
      const DiagMat t = tag_target(c.tag.n, c.tag.which);
      EXPECT_EQ(c.quad.A, to_sym(t));
    }
    if (c.tag.kind == TagKind::Perturbed) {
      saw_perturbed = true;
      EXPECT_LE(distance(c.quad.A, to_sym(tag_target(c.tag.n, c.tag.which))), c.tag.bound + 1e-15);
    }
    EXPECT_GT(c.quad.A.min_eigenvalue(), 0.0);
  }
  EXPECT_TRUE(saw_atom);
  EXPECT_TRUE(saw_perturbed);
}

TEST(Split, Errors) {
  Cell cell;
  cell.region = rectangle({0, 0, 1, 1});
  cell.quad = Quadratic::centered(to_sym(DiagMat{1, 1}), {0, 0}, {0, 0}, 0);
  SplitConfig cfg;
  const DiagMat b{2, 1}, c{0, 1};
  auto kind_of = [&](auto&& f) {
    try {
      f();
    } catch (const SplitError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no SplitError";
    return SplitError::Kind::InvalidConfig;
  };
  EXPECT_EQ(kind_of([&] { split_cell(cell, DiagMat{2, 2}, DiagMat{0, 0}, Rational(1, 2), cfg); }),
            SplitError::Kind::NotRankOne);
  EXPECT_EQ(kind_of([&] { split_cell(cell, b, c, Rational(1, 3), cfg); }), SplitError::Kind::NotBarycenter);
  EXPECT_EQ(kind_of([&] { split_cell(cell, b, c, Rational(0), cfg); }), SplitError::Kind::DegenerateWeight);
  Cell hex = cell;
  hex.region = regular_polygon(6);
  EXPECT_EQ(kind_of([&] { split_cell(hex, b, c, Rational(1, 2), cfg); }), SplitError::Kind::NotAxisAligned);
  SplitConfig tight = cfg;
  tight.eta = Rational(1, 100);
  tight.max_cells = 10;
  EXPECT_EQ(kind_of([&] { split_cell(cell, b, c, Rational(1, 2), tight); }), SplitError::Kind::BudgetInfeasible);
}

TEST(Split, ClampedEps) {
  SplitConfig cfg;
  cfg.eps = 1;
  cfg.clamp_eps = true;
  EXPECT_NEAR(effective_eps(DiagMat{2, 1}, DiagMat{1, 1}, cfg), 0.45, 1e-15);
  cfg.clamp_eps = false;
  EXPECT_NEAR(effective_eps(DiagMat{2, 1}, DiagMat{1, 1}, cfg), 1.0, 1e-15);
}

TEST(Tiling, SquaresInDisk) {
  const Polygon disk = regular_polygon(256);
  const TilingResult t = tile_with_squares(disk, 0.2, 0.01, 0.9);
  EXPECT_GE(t.coverage, 0.9);
  double sum = 0;
  for (const Polygon& q : t.squares) {
    const auto b = as_box(q);
    ASSERT_TRUE(b.has_value());
    EXPECT_NEAR(b->width(), b->height(), 1e-12);
    EXPECT_LE(b->width(), 0.2 + 1e-12);
    for (const Vec2& v : q) EXPECT_TRUE(contains(disk, v, 1e-12));
    sum += area(q);
  }
  EXPECT_NEAR(sum / area(disk), t.coverage, 1e-12);
  EXPECT_THROW(tile_with_squares(disk, 0.2, 0.5, 0.9), TilingError);
}
