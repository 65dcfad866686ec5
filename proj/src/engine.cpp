#include "stair/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace stair {

Rational RunConfig::eps(int j) const {
  const auto it = eps_override.find(j);
  return it != eps_override.end() ? it->second : epsilon(j);
}

void RunConfig::check() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (eta <= 0 || eta >= 1) throw std::invalid_argument("eta must lie in (0,1)");
  if (coverage_relax < Rational(9, 10) || coverage_relax >= 1)
    throw std::invalid_argument("coverage_relax must lie in [0.9, 1)");
  if (gap_fraction <= 0 || gap_fraction >= 1) throw std::invalid_argument("gap_fraction must lie in (0,1)");
  if (base_coverage && (*base_coverage < 0 || *base_coverage >= 1))
    throw std::invalid_argument("base_coverage must lie in [0,1)");
  for (const auto& [j, e] : eps_override)
    if (j < 1 || e <= 0) throw std::invalid_argument("eps overrides need j >= 1 and eps > 0");
  if (cell_budget == 0) throw std::invalid_argument("cell_budget must be positive");
  if (polygon_sides < 8) throw std::invalid_argument("polygon_sides must be >= 8");
  if (boundary_layers < 0) throw std::invalid_argument("boundary_layers must be >= 0");
  if (c1_grid < 2) throw std::invalid_argument("c1_grid must be >= 2");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Complete:
      return "complete";
    case RunStatus::BudgetExhausted:
      return "budget_exhausted";
    case RunStatus::EmptyLevelSet:
      return "empty_level_set";
  }
  return "unknown";
}

namespace {

// Runs fn(i) for i in [0, n) on a few threads. Stops handing out work after
// the first exception, which is rethrown; the smallest failing index wins.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> error_at(threads, n);
  auto worker = [&](unsigned t) {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
        error_at[t] = i;
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();
  std::size_t best = n;
  std::exception_ptr err;
  for (unsigned t = 0; t < threads; ++t)
    if (errors[t] && error_at[t] < best) {
      best = error_at[t];
      err = errors[t];
    }
  if (err) std::rethrow_exception(err);
}

// Convex pieces of `region` outside a row-aligned grid of squares.
std::vector<Polygon> complement(const Polygon& region, const std::vector<Polygon>& squares) {
  const Box bb = bounding_box(region);
  const double pad = 1.0 + bb.width() + bb.height();
  const double tiny = 1e-15 * area(region);
  std::vector<double> ys{bb.y0, bb.y1};
  for (const Polygon& s : squares) {
    const Box b = bounding_box(s);
    ys.push_back(b.y0);
    ys.push_back(b.y1);
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<Polygon> out;
  auto emit = [&](const Box& window) {
    Polygon piece = clip(region, rectangle(window));
    if (piece.size() >= 3 && area(piece) > tiny) out.push_back(std::move(piece));
  };
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    const double ya = ys[i], yb = ys[i + 1];
    if (ya < bb.y0 || yb > bb.y1) continue;
    std::vector<std::pair<double, double>> row;
    for (const Polygon& s : squares) {
      const Box b = bounding_box(s);
      if (b.y0 <= ya && b.y1 >= yb) row.emplace_back(b.x0, b.x1);
    }
    std::sort(row.begin(), row.end());
    double x = bb.x0 - pad;
    for (const auto& [x0, x1] : row) {
      if (x0 > x) emit({x, ya, x0, yb});
      x = x1;
    }
    emit({x, ya, bb.x1 + pad, yb});
  }
  return out;
}

// The cell as squares followed by the rest of it, all carrying its quadratic.
std::vector<Cell> tile_cell(const Cell& cell, const std::vector<Polygon>& squares) {
  std::vector<Cell> out;
  for (const Polygon& s : squares) {
    Cell c = cell;
    c.region = s;
    out.push_back(std::move(c));
  }
  for (Polygon& p : complement(cell.region, squares)) {
    Cell c = cell;
    c.region = std::move(p);
    out.push_back(std::move(c));
  }
  return out;
}

SplitConfig split_config(const RunConfig& cfg, int j, std::size_t max_cells) {
  SplitConfig sc;
  sc.eps = cfg.eps(j);
  sc.eta = cfg.eta;
  sc.boundary_layers = cfg.boundary_layers;
  sc.clamp_eps = cfg.clamp_eps;
  sc.max_cells = max_cells;
  return sc;
}

// Smallest radius the two splits of the level-n laminate run with.
double laminate_eps(int n, const SplitConfig& sc) {
  const StaircaseSchedule s = schedule(n);
  const DiagMat a_next{s.x_next, s.y_next};
  return std::min(effective_eps(s.D, s.C, sc), effective_eps(a_next, s.B, sc));
}

bool is_level_atom(const Cell& c, int j) {
  return c.tag.kind == TagKind::Atom && c.tag.n == j && c.tag.which == Which::A;
}

std::vector<std::size_t> level_set(const PWQ& u, int j) {
  std::vector<std::size_t> e;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (is_level_atom(u.cells()[i], j)) e.push_back(i);
  return e;
}

// Glues the selection and returns the state for depth j.
IterationState finish_level(PWQ u, int j, const RunConfig& cfg, const IterationState* prev, double eps_used,
                            double tiled_area) {
  IterationState st;
  st.j = j;
  st.tiled_area = tiled_area;
  std::vector<std::size_t> E = level_set(u, j);
  if (E.empty()) throw EngineError(EngineError::Kind::EmptyLevelSet, "E_" + std::to_string(j) + " is empty");
  OmegaSelection sel = select_omega(u, E, j, cfg.eps(j), cfg);

  // Ids after glue: replaced cells expand in place, squares first.
  std::vector<std::size_t> replaced_count(u.size(), 0), squares_in(u.size(), 0);
  for (std::size_t r = 0; r < sel.replacements.size(); ++r) {
    replaced_count[sel.replacements[r].first] = sel.replacements[r].second.size();
    squares_in[sel.replacements[r].first] = sel.square_counts[r];
  }
  std::vector<char> in_e(u.size(), 0);
  for (std::size_t i : E) in_e[i] = 1;
  std::vector<std::size_t> omega_cells, e_cells;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (replaced_count[i] == 0) {
      if (in_e[i]) {
        omega_cells.push_back(pos);
        e_cells.push_back(pos);
      }
      ++pos;
      continue;
    }
    for (std::size_t k = 0; k < replaced_count[i]; ++k, ++pos) {
      e_cells.push_back(pos);
      if (k < squares_in[i]) omega_cells.push_back(pos);
    }
  }
  st.u = sel.replacements.empty() ? std::move(u) : glue(u, sel.replacements);
  st.omega = std::move(sel.regions);
  st.omega_cells = std::move(omega_cells);
  st.E = std::move(e_cells);
  if (prev) st.metrics = prev->metrics;
  MetricsRow row = measure(st);
  row.coverage = sel.coverage;
  row.eps = cfg.eps(j);
  row.eps_used = eps_used;
  row.base_area = tiled_area;
  if (prev) row.c1_delta = c1_distance(st.u, prev->u, default_samples(st.u, prev->u, cfg.c1_grid));
  st.metrics.push_back(row);
  return st;
}

// Area fractions of a laminate application against its weights.
void check_fractions(const std::vector<Replacement>& repl, const PWQ& parent, int n, double eps, double eta) {
  const Laminate nu = staircase(n);
  const auto label = staircase_labeler(n);
  for (const auto& [id, children] : repl) {
    const double total = area(parent.cells()[id].region);
    for (const Atom& at : nu.atoms()) {
      const auto [m, w] = label(at.matrix);
      double a = 0.0;
      for (const Cell& c : children)
        if (c.tag.kind == TagKind::Atom && c.tag.n == m && c.tag.which == w) a += area(c.region);
      const double lam = to_double(at.weight);
      if (std::abs(a / total - lam) > eps * lam + 2.0 * eta + 1e-12)
        throw EngineError(EngineError::Kind::PropertyViolation,
                          "atom fraction " + std::to_string(a / total) + " too far from weight " + std::to_string(lam));
    }
  }
}

// Applies the level-n laminate to the listed cells of u, within the budget.
PWQ refine(const PWQ& u, const std::vector<std::size_t>& targets, int n, const SplitConfig& sc_base,
           const RunConfig& cfg) {
  const std::size_t kept = u.size() - targets.size();
  if (kept >= cfg.cell_budget)
    throw EngineError(EngineError::Kind::BudgetExhausted, "cell budget exhausted before refining");
  SplitConfig sc = sc_base;
  sc.max_cells = cfg.cell_budget - kept;
  const Laminate nu = staircase(n);
  const AtomLabeler label = staircase_labeler(n);
  std::vector<Replacement> repl(targets.size());
  std::atomic<std::size_t> total{kept};
  try {
    parallel_for(targets.size(), cfg.threads, [&](std::size_t i) {
      const Cell& c = u.cells()[targets[i]];
      repl[i] = {c.id, apply_laminate(c, nu, sc, label, n)};
      for (Cell& ch : repl[i].second) ch.depth = n + 1;
      if (total.fetch_add(repl[i].second.size()) + repl[i].second.size() > cfg.cell_budget)
        throw SplitError(SplitError::Kind::BudgetInfeasible, "cell budget");
    });
  } catch (const SplitError& e) {
    if (e.kind() == SplitError::Kind::BudgetInfeasible)
      throw EngineError(EngineError::Kind::BudgetExhausted,
                        "laminate of level " + std::to_string(n) + " exceeds the cell budget of " +
                            std::to_string(cfg.cell_budget));
    throw;
  }
  check_fractions(repl, u, n, laminate_eps(n, sc), to_double(cfg.eta));
  return glue(u, repl);
}

void check_c1(const IterationState& st, const RunConfig& cfg) {
  const double eps = to_double(cfg.eps(st.j));
  const double d = st.metrics.back().c1_delta;
  if (d > eps)
    throw EngineError(EngineError::Kind::PropertyViolation,
                      "C1 distance " + std::to_string(d) + " exceeds eps " + std::to_string(eps));
}

IterationState initial_state(const RunConfig& cfg) {
  IterationState st;
  const Polygon domain = regular_polygon(cfg.polygon_sides, 1.0);
  const StaircaseSchedule s0 = schedule(0);
  st.j = 0;
  st.u = PWQ::single(domain, Quadratic{to_sym(s0.A), {0, 0}, 0.0});
  st.tiled_area = area(domain);
  return st;
}

}  // namespace

OmegaSelection select_omega(const PWQ& u, const std::vector<std::size_t>& E, int j, const Rational& eps_j,
                            const RunConfig& cfg) {
  if (j < 1) throw std::invalid_argument("select_omega needs j >= 1");
  double e_area = 0.0;
  for (std::size_t i : E) e_area += area(u.cells()[i].region);
  if (E.empty() || !(e_area > 0.0)) throw EngineError(EngineError::Kind::EmptyLevelSet, "E has no area");

  std::vector<char> in_e(u.size(), 0);
  for (std::size_t i : E) in_e[i] = 1;
  const double max_diam = 2.0 / j;
  const double target = std::max(1.0 - to_double(eps_j), to_double(cfg.coverage_relax));
  const double gap = to_double(cfg.gap_fraction);

  OmegaSelection out;
  double covered = 0.0;
  for (std::size_t i : E) {
    const Cell& c = u.cells()[i];
    const auto box = as_box(c.region);
    bool whole = box && diameter(c.region) <= max_diam;
    if (whole) {
      const double tol = 1e-12 * std::max(1.0, diameter(c.region));
      const Box probe{box->x0 - tol, box->y0 - tol, box->x1 + tol, box->y1 + tol};
      for (std::size_t k : u.candidates(probe)) {
        if (k == i || !in_e[k]) continue;
        const Box o = bounding_box(u.cells()[k].region);
        if (o.x0 <= probe.x1 && probe.x0 <= o.x1 && o.y0 <= probe.y1 && probe.y0 <= o.y1) {
          whole = false;
          break;
        }
      }
    }
    if (whole) {
      out.regions.push_back(c.region);
      covered += area(c.region);
      continue;
    }
    TilingResult t;
    try {
      t = tile_with_squares(c.region, std::sqrt(2.0) / j, gap, target);
    } catch (const TilingError&) {
      // Unreachable target: keep the best grid the gap allows.
      t = tile_with_squares(c.region, std::sqrt(2.0) / j, gap, 0.0);
    }
    for (const Polygon& s : t.squares) {
      out.regions.push_back(s);
      covered += area(s);
    }
    out.replacements.emplace_back(c.id, tile_cell(c, t.squares));
    out.square_counts.push_back(t.squares.size());
  }
  out.coverage = covered / e_area;
  return out;
}

MetricsRow measure(const IterationState& st) {
  MetricsRow r;
  r.j = st.j;
  r.yj = schedule(st.j).y;
  r.cell_count = st.u.size();
  r.rho_min = INFINITY;
  r.det_min = INFINITY;
  r.det_max = -INFINITY;
  for (const Cell& c : st.u.cells()) {
    const double ar = area(c.region);
    r.rho_min = std::min(r.rho_min, c.quad.A.min_eigenvalue());
    r.det_min = std::min(r.det_min, c.quad.A.det());
    r.det_max = std::max(r.det_max, c.quad.A.det());
    r.tv_proxy += c.quad.A.trace() * ar;
    if (c.tag.kind == TagKind::Residual) r.residual_area += ar;
  }
  for (std::size_t i : st.omega_cells) {
    const Cell& c = st.u.cells()[i];
    const double ar = area(c.region);
    r.area_omega += ar;
    r.mass22 += c.quad.A.a22 * ar;
  }
  for (std::size_t i : st.E) r.area_e += area(st.u.cells()[i].region);
  return r;
}

IterationState base_step(const RunConfig& cfg) {
  cfg.check();
  const IterationState u0 = initial_state(cfg);
  const Polygon& domain = u0.u.domain();
  const double target = to_double(cfg.base_coverage.value_or(cfg.coverage_relax));
  // Largest axis-aligned square inside the polygon's incircle.
  const double apothem = std::cos(std::numbers::pi / cfg.polygon_sides);
  const TilingResult t =
      tile_with_squares(domain, std::sqrt(2.0) * apothem * (1.0 - 1e-9), to_double(cfg.gap_fraction), target);

  std::vector<Cell> cells = tile_cell(u0.u.cells().front(), t.squares);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = i;
  const PWQ tiled(domain, std::move(cells));
  std::vector<std::size_t> targets(t.squares.size());
  double tiled_area = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i] = i;
    tiled_area += area(t.squares[i]);
  }
  const SplitConfig sc = split_config(cfg, 1, 0);
  PWQ u1 = refine(tiled, targets, 0, sc, cfg);
  IterationState out = finish_level(std::move(u1), 1, cfg, &u0, laminate_eps(0, sc), tiled_area);
  check_c1(out, cfg);
  return out;
}

IterationState step(const IterationState& state, const RunConfig& cfg) {
  if (state.j < 1) throw std::invalid_argument("step needs j >= 1");
  if (state.omega_cells.empty()) throw EngineError(EngineError::Kind::EmptyLevelSet, "Omega is empty");
  const int j = state.j;
  const SplitConfig sc = split_config(cfg, j + 1, 0);
  PWQ next = refine(state.u, state.omega_cells, j, sc, cfg);
  IterationState out = finish_level(std::move(next), j + 1, cfg, &state, laminate_eps(j, sc), state.tiled_area);
  check_c1(out, cfg);
  return out;
}

Trajectory run(const RunConfig& cfg) {
  cfg.check();
  Trajectory tr;
  tr.states.push_back(initial_state(cfg));
  try {
    tr.states.push_back(base_step(cfg));
    while (tr.states.back().j < cfg.depth) tr.states.push_back(step(tr.states.back(), cfg));
  } catch (const EngineError& e) {
    if (e.kind() == EngineError::Kind::PropertyViolation) throw;
    tr.status = e.kind() == EngineError::Kind::BudgetExhausted ? RunStatus::BudgetExhausted : RunStatus::EmptyLevelSet;
    tr.message = e.what();
  }
  return tr;
}

}  // namespace stair
