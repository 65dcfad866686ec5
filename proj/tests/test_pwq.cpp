#include "stair/pwq.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stair;

namespace {

const SymMat kA0{0.5, 0.0, 0.5};

// Four quadrants of the unit square, each a different quadratic glued C^1
// along the midlines: u = u0 + s * max(x - 1/2, 0)^2 / 2 on the right half.
PWQ kinked(double s) {
  std::vector<Cell> cells;
  const Quadratic left = Quadratic::centered(kA0, {0, 0}, {0, 0}, 0);
  Quadratic right = left;
  right.A.a11 += s;
  right.b.x -= 0.5 * s;
  right.c += 0.125 * s;
  std::uint64_t id = 0;
  for (double y0 : {0.0, 0.5}) {
    cells.push_back({rectangle({0, y0, 0.5, y0 + 0.5}), left, CellTag::untouched(), 0, id++});
    cells.push_back({rectangle({0.5, y0, 1, y0 + 0.5}), right, CellTag::untouched(), 0, id++});
  }
  return PWQ(rectangle({0, 0, 1, 1}), std::move(cells));
}

}  // namespace

TEST(Geometry, AreasAndClip) {
  EXPECT_DOUBLE_EQ(area(rectangle({0, 0, 2, 3})), 6.0);
  const Polygon p = regular_polygon(1024);
  EXPECT_NEAR(area(p), 512 * std::sin(2 * std::numbers::pi / 1024), 1e-13);
  EXPECT_NEAR(overlap_area(rectangle({0, 0, 1, 1}), rectangle({0.5, 0.5, 2, 2})), 0.25, 1e-15);
  EXPECT_TRUE(as_box(rectangle({1, 2, 3, 4})).has_value());
  EXPECT_FALSE(as_box(regular_polygon(6)).has_value());
  EXPECT_TRUE(clip(rectangle({0, 0, 1, 1}), rectangle({2, 2, 3, 3})).empty());
}

TEST(Pwq, EvaluateAndGradient) {
  const PWQ f = kinked(2.0);
  EXPECT_NEAR(f.evaluate({0.25, 0.25}), 0.25 * (0.0625 + 0.0625), 1e-15);
  const Vec2 p{0.75, 0.3};
  EXPECT_NEAR(f.evaluate(p), 0.25 * (p.x * p.x + p.y * p.y) + 0.0625, 1e-15);
  EXPECT_NEAR(f.gradient(p).x, 0.5 * p.x + 2.0 * 0.25, 1e-15);
  EXPECT_THROW(f.locate({1.5, 0.5}), PwqError);
}

TEST(Pwq, ValidateAcceptsC1Gluing) {
  const ValidationReport r = validate(kinked(1.0));
  EXPECT_TRUE(r.ok);
  EXPECT_LE(r.worst_edge_mismatch, kGlueTol);
  EXPECT_NEAR(r.min_eigenvalue, 0.5, 1e-15);
}

TEST(Pwq, ValidateRejectsJump) {
  std::vector<Cell> cells = kinked(1.0).cells();
  cells[1].quad.c += 1e-3;
  const ValidationReport r = validate(PWQ(rectangle({0, 0, 1, 1}), cells));
  EXPECT_FALSE(r.ok);
  EXPECT_GT(r.worst_edge_mismatch, 1e-4);
}

TEST(Pwq, NegativeEigenvalueIsReported) {
  std::vector<Cell> cells = kinked(1.0).cells();
  cells[2].quad.A.a22 = -0.1;
  const PWQ f(rectangle({0, 0, 1, 1}), cells);
  EXPECT_NEAR(validate(f).min_eigenvalue, -0.1, 1e-15);
  EXPECT_THROW(monge_ampere_mass(f, f.domain()), PwqError);
}

TEST(Pwq, ValidateRejectsGap) {
  std::vector<Cell> cells = kinked(1.0).cells();
  cells.pop_back();
  EXPECT_FALSE(validate(PWQ(rectangle({0, 0, 1, 1}), cells)).ok);
}

TEST(Pwq, MongeAmpereMassOfU0) {
  // det(A0) = 1/4 times the polygon area, pi/4 in the limit.
  const Polygon disk = regular_polygon(1024);
  const PWQ u0 = PWQ::single(disk, Quadratic::centered(kA0, {0, 0}, {0, 0}, 0));
  EXPECT_NEAR(monge_ampere_mass(u0, disk), 0.25 * area(disk), 1e-15);
  EXPECT_NEAR(monge_ampere_mass(u0, disk), std::numbers::pi / 4, 1e-5);
}

TEST(Pwq, MassOfPiecewise) {
  const PWQ f = kinked(2.0);
  // Left half det 1/4, right half det 2.5 * 0.5.
  EXPECT_NEAR(monge_ampere_mass(f, rectangle({0, 0, 1, 1})), 0.5 * 0.25 + 0.5 * 1.25, 1e-15);
  EXPECT_NEAR(area_where(f, [](const Cell& c) { return c.quad.A.a11 > 1; }), 0.5, 1e-15);
}

TEST(Pwq, C1DistanceOracle) {
  const PWQ f = kinked(0.0), g = kinked(1.0);
  // |g - f| <= 1/8 at x = 1, gradient gap 1/2.
  const double d = c1_distance(f, g, default_samples(f, g, 64));
  EXPECT_NEAR(d, 0.125 + 0.5, 1e-12);
}

TEST(Pwq, GlueKeepsIdsConsecutive) {
  const PWQ f = kinked(1.0);
  const Cell& parent = f.cells()[0];
  std::vector<Cell> kids;
  for (double x0 : {0.0, 0.25}) kids.push_back({rectangle({x0, 0, x0 + 0.25, 0.5}), parent.quad, parent.tag, 1, 0});
  const PWQ g = glue(f, {{parent.id, kids}});
  EXPECT_EQ(g.size(), 5u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.cells()[i].id, i);
  EXPECT_TRUE(validate(g).ok);
  EXPECT_EQ(boundary_mismatch(parent, kids), 0.0);
}

TEST(Pwq, TagRoundTrip) {
  for (const CellTag& t : {CellTag::atom(3, Which::B), CellTag::perturbed(2, Which::C, 0.01), CellTag::residual(1),
                           CellTag::untouched()}) {
    const auto back = parse_tag(to_string(t));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->kind, t.kind);
    EXPECT_EQ(back->n, t.n);
  }
  EXPECT_FALSE(parse_tag("bogus").has_value());
}
