#include "stair/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace stair;
namespace fs = std::filesystem;

namespace {

// Unit square split into a 4x4 grid; the listed cells carry A_1.
PWQ grid_with(const std::vector<std::size_t>& e_cells) {
  const SymMat a1 = to_sym(schedule(1).A), a0 = to_sym(schedule(0).A);
  std::vector<Cell> cells;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      Cell cell;
      cell.region = rectangle({c / 4.0, r / 4.0, (c + 1) / 4.0, (r + 1) / 4.0});
      cell.id = cells.size();
      const bool e = std::find(e_cells.begin(), e_cells.end(), cell.id) != e_cells.end();
      cell.quad = Quadratic::centered(e ? a1 : a0, {0, 0}, {0, 0}, 0);
      cell.tag = e ? CellTag::atom(1, Which::A) : CellTag::untouched();
      cells.push_back(cell);
    }
  return PWQ(rectangle({0, 0, 1, 1}), std::move(cells));
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stair_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Engine, ConfigChecks) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  cfg.depth = 0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg.depth = 2;
  cfg.eta = 1;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg.eta = Rational(1, 100);
  EXPECT_EQ(cfg.eps(3), Rational(1, 1000));
  cfg.eps_override[1] = 1;
  EXPECT_EQ(cfg.eps(1), 1);
  EXPECT_TRUE(cfg.eps_overridden(1));
}

TEST(Engine, SelectOmegaWholeCells) {
  // Two diagonal cells with disjoint closures, one pair sharing an edge.
  const PWQ u = grid_with({0, 10, 2, 3});
  RunConfig cfg;
  const OmegaSelection sel = select_omega(u, {0, 10, 2, 3}, 1, Rational(1, 10), cfg);
  // Cells 0 and 10 are isolated and kept whole; 2 and 3 touch and get tiled.
  EXPECT_EQ(sel.replacements.size(), 2u);
  ASSERT_EQ(sel.square_counts.size(), 2u);
  for (std::size_t k : sel.square_counts) EXPECT_GE(k, 1u);
  for (std::size_t a = 0; a < sel.regions.size(); ++a)
    for (std::size_t b = a + 1; b < sel.regions.size(); ++b) {
      const Box p = bounding_box(sel.regions[a]), q = bounding_box(sel.regions[b]);
      const bool apart = p.x1 < q.x0 || q.x1 < p.x0 || p.y1 < q.y0 || q.y1 < p.y0;
      EXPECT_TRUE(apart);
    }
  for (const Polygon& r : sel.regions) EXPECT_LE(diameter(r), 2.0 + 1e-12);
  EXPECT_GT(sel.coverage, 0.9);
  EXPECT_LE(sel.coverage, 1.0);
}

TEST(Engine, SelectOmegaSmallDiameter) {
  const PWQ u = grid_with({5});
  const OmegaSelection sel = select_omega(u, {5}, 8, Rational(1, 10), RunConfig{});
  ASSERT_EQ(sel.replacements.size(), 1u);
  for (const Polygon& r : sel.regions) EXPECT_LE(diameter(r), 2.0 / 8 + 1e-12);
  EXPECT_THROW(select_omega(u, {}, 1, Rational(1, 10), RunConfig{}), EngineError);
}

TEST(Engine, BudgetExhaustedKeepsU0) {
  RunConfig cfg;
  cfg.depth = 1;
  cfg.cell_budget = 1000;
  const Trajectory tr = run(cfg);
  EXPECT_EQ(tr.status, RunStatus::BudgetExhausted);
  ASSERT_EQ(tr.states.size(), 1u);
  const PWQ& u0 = tr.states[0].u;
  EXPECT_NEAR(monge_ampere_mass(u0, u0.domain()), 0.25 * u0.domain_area(), 1e-15);
  EXPECT_NEAR(u0.domain_area(), std::numbers::pi, 2e-5);
}

TEST(Verify, DetBoundsAndSpectrum) {
  const PWQ u = grid_with({3, 6});
  const DetBounds d = det_bounds(u);
  EXPECT_NEAR(d.min, 0.25, 1e-15);
  EXPECT_NEAR(d.max, 0.5, 1e-15);
  EXPECT_TRUE(d.atoms_exact);
  EXPECT_NEAR(convexity_spectrum(u), 0.25, 1e-15);
}

TEST(Verify, StrictConvexityProbe) {
  const Polygon disk = regular_polygon(128);
  const PWQ u0 = PWQ::single(disk, Quadratic::centered(to_sym(schedule(0).A), {0, 0}, {0, 0}, 0));
  const auto segs = probe_segments(u0, 200, 3);
  ASSERT_EQ(segs.size(), 200u);
  for (const Segment& s : segs) {
    const double len = norm(s.q - s.p);
    EXPECT_GE(len, 0.05 - 1e-12);
    EXPECT_LE(len, 1.0 + 1e-12);
  }
  EXPECT_TRUE(strict_convexity_probe(u0, segs, 0.5).pass());
  // The exact midpoint gap of u0 is (1/2)/8 |p-q|^2, so a larger rho must fail.
  EXPECT_FALSE(strict_convexity_probe(u0, segs, 0.6).pass());
}

TEST(Verify, SubgradientOracleOnU0) {
  const Polygon disk = regular_polygon(256);
  const PWQ u0 = PWQ::single(disk, Quadratic::centered(to_sym(schedule(0).A), {0, 0}, {0, 0}, 0));
  const OracleResult r = subgradient_oracle(u0, disk, 512);
  const double exact = 0.25 * area(disk);
  EXPECT_LE(std::abs(r.estimate - exact), std::max(0.02 * exact, r.bound));
}

TEST(Verify, ProductLimits) {
  const ProductLimits p = product_limits(20);
  ASSERT_EQ(p.t.size(), 20u);
  EXPECT_NEAR(p.t[0], 56.0 / 75.0, 1e-15);
  EXPECT_GE(p.t[19], 0.40);
  EXPECT_LE(p.t[19], 0.42);
}

TEST(Io, ConfigParsing) {
  RunConfig cfg;
  apply_config(cfg, {{"depth", "3"}, {"eta", "0.05"}, {"eps-override", "1:1, 2:1/10"}, {"clamp-eps", "false"}});
  EXPECT_EQ(cfg.depth, 3);
  EXPECT_EQ(cfg.eta, Rational(1, 20));
  EXPECT_EQ(cfg.eps(1), 1);
  EXPECT_EQ(cfg.eps(2), Rational(1, 10));
  EXPECT_FALSE(cfg.clamp_eps);
  EXPECT_THROW(apply_config(cfg, {{"bogus", "1"}}), std::invalid_argument);
  EXPECT_THROW(apply_config(cfg, {{"eta", "x"}}), std::invalid_argument);
  RunConfig back;
  apply_config(back, config_to_kv(cfg));
  EXPECT_EQ(config_to_kv(back), config_to_kv(cfg));
}

TEST(Io, FileHashIsFnv1a) {
  const fs::path p = scratch("hash");
  std::ofstream(p) << "a";
  EXPECT_EQ(file_hash(p), "af63dc4c8601ec8c");
  fs::remove(p);
}

TEST(Io, MeshRoundTrip) {
  IterationState st;
  st.j = 1;
  st.u = grid_with({0, 10});
  st.omega_cells = {0, 10};
  st.E = {0, 10};
  st.tiled_area = 1.0;
  const fs::path p = scratch("mesh.json");
  write_mesh_json(p, st);
  const IterationState back = read_mesh_json(p);
  ASSERT_EQ(back.u.size(), st.u.size());
  for (std::size_t i = 0; i < st.u.size(); ++i) {
    EXPECT_EQ(back.u.cells()[i].quad.A, st.u.cells()[i].quad.A);
    EXPECT_EQ(back.u.cells()[i].region, st.u.cells()[i].region);
  }
  EXPECT_EQ(back.omega_cells, st.omega_cells);
  EXPECT_EQ(back.omega.size(), 2u);
  fs::remove(p);
}

TEST(Io, SaveLoadRunIsDeterministic) {
  RunConfig cfg;
  cfg.depth = 1;
  cfg.cell_budget = 1000;
  const Trajectory tr = run(cfg);
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  save_run(a, tr, cfg);
  save_run(b, run(cfg), cfg);
  EXPECT_EQ(file_hash(a / "manifest.json"), file_hash(b / "manifest.json"));
  const auto [loaded, lcfg] = load_run(a);
  EXPECT_EQ(loaded.status, RunStatus::BudgetExhausted);
  EXPECT_EQ(loaded.states.size(), 1u);
  EXPECT_EQ(config_to_kv(lcfg), config_to_kv(cfg));
  EXPECT_THROW(load_run(scratch("missing")), IoError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Verify, CorruptedMeshNamesConvexitySpectrum) {
  Trajectory tr;
  IterationState st;
  SymMat bad = to_sym(schedule(0).A);
  bad.a22 = -0.5;
  st.u = PWQ::single(regular_polygon(64), Quadratic::centered(bad, {0, 0}, {0, 0}, 0));
  tr.states.push_back(st);
  const Report rep = verify_all(tr, RunConfig{}, true);
  EXPECT_FALSE(rep.pass());
  const auto it = std::find_if(rep.checks.begin(), rep.checks.end(),
                               [](const Check& c) { return c.name == "convexity_spectrum[j=0]"; });
  ASSERT_NE(it, rep.checks.end());
  EXPECT_FALSE(it->pass);
}
