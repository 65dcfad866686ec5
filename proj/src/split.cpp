#include "stair/split.hpp"

#include "stair/powell_sabin.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace stair {

namespace {

using Kind = SplitError::Kind;

// Local frame: t runs along the split axis, v across it.
struct Frame {
  Axis axis;
  Vec2 to_global(Vec2 p) const { return axis == Axis::X ? p : Vec2{p.y, p.x}; }
  Polygon to_global(std::span<const Vec2> local) const {
    Polygon out;
    out.reserve(local.size());
    for (const Vec2& p : local) out.push_back(to_global(p));
    if (axis == Axis::Y) std::reverse(out.begin(), out.end());
    return out;
  }
  SymMat to_global(const SymMat& h) const { return axis == Axis::X ? h : SymMat{h.a22, h.a12, h.a11}; }
  Quadratic to_global(const Quadratic& q) const { return {to_global(q.A), to_global(q.b), q.c}; }
};

struct Plan {
  double t0 = 0, t1 = 1, v0 = 0, v1 = 1;
  double pe = 0, pm = 0;  // along-axis increments of the edge and middle targets
  double a = 0;           // half the edge weight
  SymMat a_loc;           // parent Hessian in (t, v)
  double kappa = 1;       // strip width over taper height
  double K = 1;           // interface thickness in strip widths
};

// Sawtooth bump of one strip, centered at 0, width ell: second derivative pe
// on the two edge parts of width a*ell and pm in the middle.
struct Bump {
  double h, ae, u0, pe, pm, beta;
  Bump(const Plan& p, double ell)
      : h(0.5 * ell), ae(p.a * ell), u0(0.5 * ell - p.a * ell), pe(p.pe), pm(p.pm),
        beta(0.5 * p.pe * ae * ae - 0.5 * p.pm * u0 * u0) {}
  double value(double u) const {
    const double au = std::abs(u);
    return au >= u0 ? 0.5 * pe * (h - au) * (h - au) : beta + 0.5 * pm * u * u;
  }
  double slope(double u) const {
    const double au = std::abs(u);
    const double d = au >= u0 ? -pe * (h - au) : pm * au;
    return u < 0 ? -d : d;
  }
  // d/ds of s^2 p(u/s) at s = 1.
  double psi(double u) const { return 2.0 * value(u) - u * slope(u); }
};

enum class Part : std::uint8_t { CoreEdge, CoreMiddle, TaperEdge, TaperMiddle, Gap, Interface };

struct LocalCell {
  Polygon poly;  // local (t, v), ccw
  Quadratic g;   // correction in local coordinates
  Part part;
};

std::vector<Vec2> ccw(std::vector<Vec2> p) {
  if (signed_area(p) < 0) std::reverse(p.begin(), p.end());
  return p;
}

// C^1 piecewise quadratic on the grid tx x vy from Hermite data at the grid
// nodes, two Powell-Sabin macro triangles per box.
void ps_grid(const std::vector<double>& tx, const std::vector<double>& vy,
             const std::function<HermiteVertex(int, int)>& data, std::vector<LocalCell>& out) {
  const int rows = static_cast<int>(vy.size()) - 1, cols = static_cast<int>(tx.size()) - 1;
  auto pt = [&](int r, int c) { return Vec2{tx[c], vy[r]}; };
  auto zlo = [&](int r, int c) { return incenter(pt(r, c), pt(r, c + 1), pt(r + 1, c + 1)); };
  auto zhi = [&](int r, int c) { return incenter(pt(r, c), pt(r + 1, c + 1), pt(r + 1, c)); };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec2 z_lo = zlo(r, c), z_hi = zhi(r, c);
      const Vec2 diag = line_intersection(z_lo, z_hi, pt(r, c), pt(r + 1, c + 1));
      auto horiz = [&](int rr) {
        if (rr == 0 || rr == rows) return 0.5 * (pt(rr, c) + pt(rr, c + 1));
        return line_intersection(zlo(rr, c), zhi(rr - 1, c), pt(rr, c), pt(rr, c + 1));
      };
      auto vert = [&](int cc) {
        if (cc == 0 || cc == cols) return 0.5 * (pt(r, cc) + pt(r + 1, cc));
        return line_intersection(zlo(r, cc - 1), zhi(r, cc), pt(r, cc), pt(r + 1, cc));
      };
      const auto lo = powell_sabin({data(r, c), data(r, c + 1), data(r + 1, c + 1)}, {horiz(r), vert(c + 1), diag}, z_lo);
      const auto hi = powell_sabin({data(r, c), data(r + 1, c + 1), data(r + 1, c)}, {diag, horiz(r + 1), vert(c)}, z_hi);
      for (const auto* set : {&lo, &hi})
        for (const PsPiece& piece : *set) out.push_back({ccw(piece.tri), piece.quad, Part::Interface});
    }
  }
}

constexpr double kEpsClamp = 0.45;

using GapHandler = std::function<void(Vec2, Vec2, Vec2)>;

void construct(const Plan& p, int n, std::vector<LocalCell>& out, const GapHandler* on_gap) {
  const double ell = (p.t1 - p.t0) / n;
  const Bump bm(p, ell);
  const double H = ell / p.kappa, L = p.K * ell;
  auto knot = [&](int k) { return k == n ? p.t1 : p.t0 + k * ell; };
  auto center = [&](int k) { return p.t0 + (k + 0.5) * ell; };

  const double lo = p.v0 + H + L, hi = p.v1 - H - L;
  for (int k = 0; k <= n; ++k) {
    const double tk = knot(k);
    const double l = k == 0 ? tk : tk - bm.ae, r = k == n ? tk : tk + bm.ae;
    out.push_back({{{l, lo}, {r, lo}, {r, hi}, {l, hi}}, Quadratic::centered({p.pe, 0, 0}, {tk, lo}, {0, 0}, 0),
                   Part::CoreEdge});
    if (k == n) break;
    const double ck = center(k);
    out.push_back({{{ck - bm.u0, lo}, {ck + bm.u0, lo}, {ck + bm.u0, hi}, {ck - bm.u0, hi}},
                   Quadratic::centered({p.pm, 0, 0}, {ck, lo}, {0, 0}, bm.beta), Part::CoreMiddle});
  }

  struct TaperPiece {
    double ua, ub, q2, q1, q0;
    Part part;
  };
  const double h = bm.h;
  const TaperPiece pieces[3] = {{-h, -bm.u0, 0.5 * p.pe, p.pe * h, 0.5 * p.pe * h * h, Part::TaperEdge},
                                {-bm.u0, bm.u0, 0.5 * p.pm, 0.0, bm.beta, Part::TaperMiddle},
                                {bm.u0, h, 0.5 * p.pe, -p.pe * h, 0.5 * p.pe * h * h, Part::TaperEdge}};
  std::vector<double> tx{p.t0};
  for (int k = 0; k < n; ++k) {
    tx.push_back(center(k) - bm.u0);
    tx.push_back(center(k) + bm.u0);
    tx.push_back(knot(k + 1));
  }
  for (const double sign : {1.0, -1.0}) {
    const double base = sign > 0 ? p.v0 : p.v1;
    const double inner = base + sign * H;
    // Taper: g = q2 u^2 + q1 u s + q0 s^2 with s = |v - base| / H.
    for (int k = 0; k < n; ++k) {
      const double ck = center(k);
      for (const TaperPiece& tp : pieces) {
        const SymMat hl{2.0 * tp.q2, sign * tp.q1 / H, 2.0 * tp.q0 / (H * H)};
        out.push_back({ccw({{ck, base}, {ck + tp.ub, inner}, {ck + tp.ua, inner}}),
                       Quadratic::centered(hl, {ck, base}, {0, 0}, 0.0), tp.part});
      }
    }
    auto gap = [&](Vec2 b1, Vec2 b2, Vec2 q) {
      if (on_gap)
        (*on_gap)(b1, b2, q);
      else
        out.push_back({ccw({b1, b2, q}), Quadratic{}, Part::Gap});
    };
    gap({p.t0, base}, {center(0), base}, {p.t0, inner});
    for (int k = 0; k + 1 < n; ++k) gap({center(k), base}, {center(k + 1), base}, {knot(k + 1), inner});
    gap({center(n - 1), base}, {p.t1, base}, {p.t1, inner});

    // Interface: from the taper's Cauchy data at s = 1 to the core's.
    const std::vector<double> vy{inner, inner + sign * L};
    auto data = [&](int r, int c) {
      const double t = tx[c];
      const int k = std::clamp(static_cast<int>(std::floor((t - p.t0) / ell)), 0, n - 1);
      const double u = std::clamp(t - center(k), -h, h);
      const double dv = r == 0 ? sign * bm.psi(u) / H : 0.0;
      return HermiteVertex{{t, vy[r]}, bm.value(u), {bm.slope(u), dv}};
    };
    ps_grid(tx, vy, data, out);
  }
}

// Distance of a correction Hessian to the segment of along-axis increments [pm, pe].
double segment_distance(const Plan& p, const SymMat& g) {
  const double off = g.a11 > p.pe ? g.a11 - p.pe : (g.a11 < p.pm ? p.pm - g.a11 : 0.0);
  return std::max({off, std::abs(g.a12), std::abs(g.a22)});
}

// Distance to the exact target of a taper piece.
double target_distance(const Plan& p, const LocalCell& c) {
  const double along = c.part == Part::TaperEdge ? p.pe : p.pm;
  return std::max({std::abs(c.g.A.a11 - along), std::abs(c.g.A.a12), std::abs(c.g.A.a22)});
}

// Exact sup of |g| + |Dg| over a convex polygon: |Dg| is affine in x so its
// norm peaks at a vertex; g peaks at a vertex, an edge critical point or the
// interior critical point.
double sup_c1(const Polygon& poly, const Quadratic& g) {
  double gmax = 0, dmax = 0;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = poly[i], d = poly[(i + 1) % m] - a;
    gmax = std::max(gmax, std::abs(g.value(a)));
    dmax = std::max(dmax, norm(g.gradient(a)));
    const double curv = dot(d, g.A.apply(d));
    if (curv != 0.0) {
      const double tau = -dot(g.gradient(a), d) / curv;
      if (tau > 0 && tau < 1) gmax = std::max(gmax, std::abs(g.value(a + tau * d)));
    }
  }
  const double det = g.A.det();
  if (det != 0.0) {
    // Critical point solves A x = -b.
    const Vec2 x{(-g.b.x * g.A.a22 + g.b.y * g.A.a12) / det, (-g.b.y * g.A.a11 + g.b.x * g.A.a12) / det};
    if (contains(poly, x)) gmax = std::max(gmax, std::abs(g.value(x)));
  }
  return gmax + dmax;
}

struct Probe {
  double kappa = 0, K = 0;
  double c1_unit = 0;  // |g| + |Dg| at unit strip width
  double cells_per_strip = 0;
};

// Unit-width probe: the taper/interface geometry is scale invariant, so the
// admissible (kappa, K) pair and the C^1 constant are decided once.
Probe probe(const Plan& base, double eps_int, double det_cap, bool check_convex) {
  Probe best;
  double best_thick = INFINITY;
  for (int kk = 2; kk >= -24; --kk) {
    const double kappa = std::ldexp(1.0, kk);
    if (1.0 / kappa >= best_thick) break;
    for (int lk = -4; lk <= 4; ++lk) {
      Plan p = base;
      p.kappa = kappa;
      p.K = std::ldexp(1.0, lk);
      p.t0 = 0;
      p.t1 = 3;
      p.v0 = 0;
      p.v1 = 2.0 * (1.0 / kappa + p.K) + 1.0;
      std::vector<LocalCell> cells;
      construct(p, 3, cells, nullptr);
      bool ok = true;
      double c1 = 0;
      for (const LocalCell& c : cells) {
        const double d = c.part == Part::Interface ? segment_distance(p, c.g.A)
                         : (c.part == Part::TaperEdge || c.part == Part::TaperMiddle) ? target_distance(p, c)
                                                                                         : 0.0;
        const SymMat hs = p.a_loc + c.g.A;
        if (d > eps_int || (check_convex && !(hs.min_eigenvalue() > 0 && hs.det() > 0 && hs.det() < det_cap))) {
          ok = false;
          break;
        }
        c1 = std::max(c1, sup_c1(c.poly, c.g));
      }
      if (!ok) continue;
      const double thick = 1.0 / kappa + p.K;
      if (thick < best_thick) {
        best_thick = thick;
        best = {kappa, p.K, c1, static_cast<double>(cells.size()) / 3.0};
      }
      break;
    }
  }
  return best;
}

Probe cached_probe(const Plan& p, double eps_int, double det_cap, bool check_convex) {
  using Key = std::tuple<double, double, double, double, double, double, double, double, bool>;
  static std::mutex mu;
  static std::map<Key, Probe> cache;
  const Key key{p.pe, p.pm, p.a, p.a_loc.a11, p.a_loc.a12, p.a_loc.a22, eps_int, det_cap, check_convex};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const Probe r = probe(p, eps_int, det_cap, check_convex);
  std::lock_guard lock(mu);
  cache.emplace(key, r);
  return r;
}

}  // namespace

SplitResult split_cell_detailed(const Cell& cell, const DiagMat& b, const DiagMat& c, const Rational& lambda,
                                const SplitConfig& cfg, const SplitLabels& labels) {
  using Kind = SplitError::Kind;
  const auto axis = rank_one_axis(b, c);
  if (!axis) throw SplitError(Kind::NotRankOne, "B - C is not an axis-aligned rank-one matrix");
  if (lambda <= 0 || lambda >= 1) throw SplitError(Kind::DegenerateWeight, "lambda must lie in (0,1)");
  const double lam = to_double(lambda);
  if (std::min(lam, 1.0 - lam) < 1e-6) throw SplitError(Kind::DegenerateWeight, "lambda too close to 0 or 1");
  if (cfg.eps <= 0 || cfg.eta <= 0 || cfg.eta >= 1 || cfg.boundary_layers < 0 || cfg.min_strips < 1)
    throw SplitError(Kind::InvalidConfig, "need eps > 0, 0 < eta < 1, boundary_layers >= 0");
  const DiagMat a = lambda * b + (1 - lambda) * c;
  if (!(cell.quad.A == to_sym(a)))
    throw SplitError(Kind::NotBarycenter, "cell Hessian is not lambda*B + (1-lambda)*C");
  const auto box = as_box(cell.region);
  if (!box) throw SplitError(Kind::NotAxisAligned, "cell is not an axis-aligned rectangle");

  const bool ax = *axis == Axis::X;
  const Frame frame{*axis};
  Plan p;
  p.t0 = ax ? box->x0 : box->y0;
  p.t1 = ax ? box->x1 : box->y1;
  p.v0 = ax ? box->y0 : box->x0;
  p.v1 = ax ? box->y1 : box->x1;
  p.a_loc = frame.to_global(cell.quad.A);  // the swap is an involution

  double eps = to_double(cfg.eps);
  const double eta = to_double(cfg.eta);
  const DiagMat pb = b - a, pc = c - a;
  const double pb_al = to_double(ax ? pb.x : pb.y), pc_al = to_double(ax ? pc.x : pc.y);
  if (cfg.clamp_eps) eps = std::min(eps, kEpsClamp * std::abs(pb_al - pc_al));
  if (2.0 * eps >= std::abs(pb_al - pc_al)) throw SplitError(Kind::InvalidConfig, "eps-balls around B and C overlap");
  // Internal radius rescaled by the weight ratio, so the rarer atom keeps its share.
  const double eps_int = eps * std::min(lam, 1.0 - lam) / std::max(lam, 1.0 - lam);
  const bool b_is_edge = pb_al > 0;
  p.pe = b_is_edge ? pb_al : pc_al;
  p.pm = b_is_edge ? pc_al : pb_al;
  p.a = 0.5 * (b_is_edge ? lam : 1.0 - lam);
  const SymMat edge_target = to_sym(b_is_edge ? b : c), middle_target = to_sym(b_is_edge ? c : b);

  const bool pd = a.x > 0 && a.y > 0 && b.x > 0 && b.y > 0 && c.x > 0 && c.y > 0;
  const double max_det = std::max({to_double(a.det()), to_double(b.det()), to_double(c.det())});
  const double det_cap = max_det < 1.0 ? 0.5 * (1.0 + max_det) : INFINITY;

  const Probe pr = cached_probe(p, eps_int, det_cap, pd);
  if (pr.kappa == 0) throw SplitError(Kind::BudgetInfeasible, "no taper stays within eps of its target");
  p.kappa = pr.kappa;
  p.K = pr.K;

  const double w_al = p.t1 - p.t0, h_ac = p.v1 - p.v0;
  const double thick = 1.0 / p.kappa + p.K;  // band plus interface, in strip widths
  auto c1_bound = [&](double ell) { return pr.c1_unit * std::max(ell, ell * ell); };
  auto admissible = [&](double ell) {
    return c1_bound(ell) <= eps_int && (1.0 / p.kappa + 2.0 * p.K) * ell <= eta * h_ac &&
           2.0 * thick * ell <= (eps + eta - eps * eta) * h_ac && 2.0 * thick * ell < h_ac;
  };
  const long long n_max = 1LL << cfg.max_strips_log2;
  long long n = 1;
  while (n < cfg.min_strips) n *= 2;
  while (n <= n_max && !admissible(w_al / n)) n *= 2;

  const double cell_area = area(cell.region);
  for (;; n *= 2) {
    if (n > n_max) throw SplitError(Kind::BudgetInfeasible, "strip count exceeds the configured maximum");
    if (cfg.max_cells > 0 && pr.cells_per_strip * static_cast<double>(n) > static_cast<double>(cfg.max_cells))
      throw SplitError(Kind::BudgetInfeasible, "split would exceed the cell budget");
    const int ns = static_cast<int>(n);
    SplitResult res;
    res.strips = ns;
    res.kappa = p.kappa;
    res.eps_used = eps;
    res.c1_bound = c1_bound(w_al / ns);

    auto push = [&](const Polygon& local, const Quadratic& g, CellTag tag, const SymMat* exact, int kind) {
      Cell child;
      child.region = frame.to_global(local);
      child.quad = cell.quad + frame.to_global(g);
      if (exact) child.quad.A = *exact;
      child.tag = tag;
      child.depth = cell.depth;
      const double ar = area(child.region);
      if (kind == 0) res.residual_area += ar;
      if (kind == 1) res.exact_b_area += ar;
      if (kind == 2) res.exact_c_area += ar;
      res.cells.push_back(std::move(child));
    };
    auto atom_tag = [&](bool is_b) {
      return CellTag::atom(is_b ? labels.n_b : labels.n_c, is_b ? labels.which_b : labels.which_c);
    };

    // Gap triangles keep the parent; with boundary_layers > 0 their inscribed
    // rectangle is split again by a rescaled copy and only the corners remain.
    GapHandler recover = [&](Vec2 b1, Vec2 b2, Vec2 q) {
      const Vec2 m1 = 0.5 * (b1 + q), m2 = 0.5 * (b2 + q);
      const Vec2 r1{m1.x, b1.y}, r2{m2.x, b2.y};
      const Polygon rect = ccw({r1, r2, m2, m1});
      Cell sub;
      sub.region = frame.to_global(rect);
      sub.quad = cell.quad;
      sub.tag = cell.tag;
      sub.depth = cell.depth;
      SplitConfig sc = cfg;
      sc.boundary_layers = cfg.boundary_layers - 1;
      sc.min_strips = 1;
      SplitResult inner = split_cell_detailed(sub, b, c, lambda, sc, labels);
      res.exact_b_area += inner.exact_b_area;
      res.exact_c_area += inner.exact_c_area;
      res.residual_area += inner.residual_area;
      for (Cell& ch : inner.cells) res.cells.push_back(std::move(ch));
      for (const Polygon& t : {Polygon{b1, r1, m1}, Polygon{r2, b2, m2}, Polygon{m1, m2, q}}) {
        if (std::abs(signed_area(t)) <= 1e-14 * cell_area) continue;
        push(ccw(t), Quadratic{}, CellTag::residual(labels.n_residual), nullptr, 0);
      }
    };

    std::vector<LocalCell> local;
    construct(p, ns, local, cfg.boundary_layers > 0 ? &recover : nullptr);
    for (LocalCell& lc : local) {
      switch (lc.part) {
        case Part::CoreEdge:
          push(lc.poly, lc.g, atom_tag(b_is_edge), &edge_target, b_is_edge ? 1 : 2);
          break;
        case Part::CoreMiddle:
          push(lc.poly, lc.g, atom_tag(!b_is_edge), &middle_target, b_is_edge ? 2 : 1);
          break;
        case Part::TaperEdge:
        case Part::TaperMiddle: {
          const bool edge = lc.part == Part::TaperEdge;
          const bool is_b = edge == b_is_edge;
          const CellTag t = CellTag::perturbed(is_b ? labels.n_b : labels.n_c,
                                               is_b ? labels.which_b : labels.which_c, target_distance(p, lc));
          push(lc.poly, lc.g, t, nullptr, 3);
          break;
        }
        case Part::Gap:
          push(lc.poly, lc.g, CellTag::residual(labels.n_residual), nullptr, 0);
          break;
        case Part::Interface: {
          CellTag t = CellTag::residual(labels.n_residual);
          t.bound = segment_distance(p, lc.g.A);
          push(lc.poly, lc.g, t, nullptr, 0);
          break;
        }
      }
    }
    if (res.residual_area <= eta * cell_area * (1 + 1e-12)) {
      for (std::size_t i = 0; i < res.cells.size(); ++i) res.cells[i].id = i;
      return res;
    }
  }
}

double effective_eps(const DiagMat& b, const DiagMat& c, const SplitConfig& cfg) {
  const DiagMat d = b - c;
  const double gap = std::max(std::abs(to_double(d.x)), std::abs(to_double(d.y)));
  const double eps = to_double(cfg.eps);
  return cfg.clamp_eps ? std::min(eps, kEpsClamp * gap) : eps;
}

std::vector<Cell> split_cell(const Cell& cell, const DiagMat& b, const DiagMat& c, const Rational& lambda,
                             const SplitConfig& cfg, const SplitLabels& labels) {
  return split_cell_detailed(cell, b, c, lambda, cfg, labels).cells;
}

AtomLabeler staircase_labeler(int n) {
  return [n](const DiagMat& m) -> std::pair<int, Which> {
    const StaircaseSchedule s = schedule(n);
    if (m == s.A) return {n, Which::A};
    if (m == s.B) return {n, Which::B};
    if (m == s.C) return {n, Which::C};
    if (m == s.D) return {n, Which::D};
    if (m == DiagMat{s.x_next, s.y_next}) return {n + 1, Which::A};
    return {n, Which::A};
  };
}

std::vector<Cell> apply_laminate(const Cell& cell, const Laminate& nu, const SplitConfig& cfg,
                                 const AtomLabeler& labeler, int residual_n) {
  if (!(cell.quad.A == to_sym(nu.barycenter())))
    throw SplitError(Kind::NotBarycenter, "cell Hessian is not the barycenter of the laminate");
  if (!as_box(cell.region)) throw SplitError(Kind::NotAxisAligned, "cell is not an axis-aligned rectangle");
  std::vector<Cell> cells{cell};
  for (const SplitRecord& rec : nu.provenance()) {
    const SymMat src = to_sym(rec.split);
    const auto [nb, wb] = labeler(rec.b);
    const auto [nc, wc] = labeler(rec.c);
    const SplitLabels labels{nb, wb, nc, wc, residual_n};
    std::vector<Cell> next;
    for (Cell& c : cells) {
      const bool hit = (c.tag.kind == TagKind::Atom || c.tag.kind == TagKind::Untouched) && c.quad.A == src &&
                       rec.lambda > 0;
      if (!hit) {
        next.push_back(std::move(c));
        continue;
      }
      if (rec.lambda < 1) {
        // Split only a lambda-fraction of the cell: cut it along y first.
        const Box bx = *as_box(c.region);
        const double ycut = bx.y0 + to_double(rec.lambda) * bx.height();
        Cell kept = c;
        kept.region = rectangle({bx.x0, ycut, bx.x1, bx.y1});
        c.region = rectangle({bx.x0, bx.y0, bx.x1, ycut});
        next.push_back(std::move(kept));
      }
      SplitConfig sc = cfg;
      if (cfg.max_cells > 0) {
        const std::size_t used = next.size() + cells.size();
        if (used >= cfg.max_cells) throw SplitError(Kind::BudgetInfeasible, "laminate exceeds the cell budget");
        sc.max_cells = cfg.max_cells - used;
      }
      for (Cell& child : split_cell(c, rec.b, rec.c, rec.s, sc, labels)) next.push_back(std::move(child));
    }
    cells = std::move(next);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = i;
  return cells;
}

std::vector<Cell> apply_laminate(const Cell& cell, const Laminate& nu, const SplitConfig& cfg) {
  auto labeler = [&nu](const DiagMat& m) -> std::pair<int, Which> {
    const auto idx = nu.index_of(m);
    return {idx ? static_cast<int>(*idx) : -1, Which::A};
  };
  return apply_laminate(cell, nu, cfg, labeler, 0);
}

namespace {

// x-extent of a convex polygon along the horizontal line at height y.
std::optional<std::pair<double, double>> chord(std::span<const Vec2> poly, double y) {
  double lo = INFINITY, hi = -INFINITY;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % n];
    if ((p.y - y) * (q.y - y) > 0) continue;
    if (p.y == q.y) {
      lo = std::min({lo, p.x, q.x});
      hi = std::max({hi, p.x, q.x});
      continue;
    }
    const double x = p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

}  // namespace

TilingResult tile_with_squares(std::span<const Vec2> region, double max_side, double gap_fraction,
                               double coverage_target) {
  if (region.size() < 3 || max_side <= 0 || gap_fraction < 0) throw TilingError("invalid tiling request");
  const double ceiling = 1.0 / ((1.0 + gap_fraction) * (1.0 + gap_fraction));
  if (coverage_target > ceiling)
    throw TilingError("gap fraction caps coverage below the target");
  const double total = area(region);
  const Box bb = bounding_box(region);
  constexpr std::size_t kMaxSquares = std::size_t{1} << 22;
  for (double side = max_side;; side *= 0.5) {
    const double pitch = side * (1.0 + gap_fraction);
    const double expected = total / (pitch * pitch);
    if (expected > static_cast<double>(kMaxSquares)) break;
    TilingResult r;
    // Rows and squares within a row are centered, so symmetric regions get symmetric tilings.
    const auto rows = static_cast<long long>(std::floor((bb.height() + gap_fraction * side) / pitch));
    const double y_start = 0.5 * (bb.y0 + bb.y1) - 0.5 * (rows * pitch - gap_fraction * side);
    for (long long i = 0; i < rows; ++i) {
      const double y = y_start + i * pitch;
      const auto c0 = chord(region, y), c1 = chord(region, y + side);
      if (!c0 || !c1) continue;
      const double l = std::max(c0->first, c1->first), rgt = std::min(c0->second, c1->second);
      if (rgt - l < side) continue;
      const auto cols = static_cast<long long>(std::floor((rgt - l + gap_fraction * side) / pitch));
      const double x_start = 0.5 * (l + rgt) - 0.5 * (cols * pitch - gap_fraction * side);
      for (long long k = 0; k < cols; ++k) {
        const double x = x_start + k * pitch;
        r.squares.push_back(rectangle({x, y, x + side, y + side}));
      }
    }
    r.coverage = static_cast<double>(r.squares.size()) * side * side / total;
    if (!r.squares.empty() && r.coverage >= coverage_target) return r;
  }
  throw TilingError("coverage target unreachable within the square budget");
}

}  // namespace stair
