#include "stair/pwq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <exception>
#include <thread>
#include <unordered_map>

namespace stair {

Quadratic Quadratic::centered(const SymMat& h, Vec2 p0, Vec2 g, double v) {
  Quadratic q;
  q.A = h;
  const Vec2 hp = h.apply(p0);
  q.b = g - hp;
  q.c = 0.5 * dot(hp, p0) - dot(g, p0) + v;
  return q;
}

Quadratic operator+(const Quadratic& p, const Quadratic& q) {
  return {p.A + q.A, p.b + q.b, p.c + q.c};
}

namespace {

const char* which_name(Which w) {
  switch (w) {
    case Which::A: return "A";
    case Which::B: return "B";
    case Which::C: return "C";
    case Which::D: return "D";
  }
  return "?";
}

}  // namespace

std::string to_string(const CellTag& t) {
  std::ostringstream os;
  switch (t.kind) {
    case TagKind::Atom: os << "atom(" << t.n << "," << which_name(t.which) << ")"; break;
    case TagKind::Perturbed:
      os.precision(17);
      os << "perturbed(" << t.n << "," << which_name(t.which) << "," << t.bound << ")";
      break;
    case TagKind::Residual: os << "residual(" << t.n << ")"; break;
    case TagKind::Untouched: os << "untouched"; break;
  }
  return os.str();
}

std::optional<CellTag> parse_tag(const std::string& s) {
  if (s == "untouched") return CellTag::untouched();
  const auto open = s.find('('), close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  const std::string head = s.substr(0, open);
  std::vector<std::string> args;
  std::stringstream ss(s.substr(open + 1, close - open - 1));
  for (std::string a; std::getline(ss, a, ',');) args.push_back(a);
  auto which = [](const std::string& w) -> std::optional<Which> {
    if (w == "A") return Which::A;
    if (w == "B") return Which::B;
    if (w == "C") return Which::C;
    if (w == "D") return Which::D;
    return std::nullopt;
  };
  try {
    if (head == "atom" && args.size() == 2) {
      auto w = which(args[1]);
      if (!w) return std::nullopt;
      return CellTag::atom(std::stoi(args[0]), *w);
    }
    if (head == "perturbed" && args.size() == 3) {
      auto w = which(args[1]);
      if (!w) return std::nullopt;
      return CellTag::perturbed(std::stoi(args[0]), *w, std::stod(args[2]));
    }
    if (head == "residual" && args.size() == 1) return CellTag::residual(std::stoi(args[0]));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return std::nullopt;
}

DiagMat tag_target(int n, Which w) {
  const StaircaseSchedule s = schedule(n);
  switch (w) {
    case Which::A: return s.A;
    case Which::B: return s.B;
    case Which::C: return s.C;
    case Which::D: return s.D;
  }
  return s.A;
}

PWQ::PWQ(Polygon domain, std::vector<Cell> cells) {
  auto d = std::make_shared<Data>();
  d->domain = std::move(domain);
  d->domain_area = area(d->domain);
  const InnerDisk disk = inner_disk(d->domain);
  d->center = disk.center;
  d->inner_radius = disk.radius;
  d->cells = std::move(cells);
  std::stable_sort(d->cells.begin(), d->cells.end(),
                   [](const Cell& a, const Cell& b) { return a.id < b.id; });
  d->boxes.reserve(d->cells.size());
  for (const auto& c : d->cells) d->boxes.push_back(bounding_box(c.region));

  Index& ix = d->index;
  ix.box = bounding_box(d->domain);
  const double side = std::sqrt(std::max<double>(1.0, static_cast<double>(d->cells.size())));
  ix.nx = std::clamp(static_cast<int>(side), 1, 4096);
  ix.ny = ix.nx;
  const double w = ix.box.width() / ix.nx, h = ix.box.height() / ix.ny;
  auto range = [&](const Box& b, int& i0, int& i1, int& j0, int& j1) {
    i0 = std::clamp(static_cast<int>(std::floor((b.x0 - ix.box.x0) / w)), 0, ix.nx - 1);
    i1 = std::clamp(static_cast<int>(std::floor((b.x1 - ix.box.x0) / w)), 0, ix.nx - 1);
    j0 = std::clamp(static_cast<int>(std::floor((b.y0 - ix.box.y0) / h)), 0, ix.ny - 1);
    j1 = std::clamp(static_cast<int>(std::floor((b.y1 - ix.box.y0) / h)), 0, ix.ny - 1);
  };
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(ix.nx) * ix.ny + 1, 0);
  for (const auto& b : d->boxes) {
    int i0, i1, j0, j1;
    range(b, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) ++counts[static_cast<std::size_t>(j) * ix.nx + i + 1];
  }
  for (std::size_t k = 1; k < counts.size(); ++k) counts[k] += counts[k - 1];
  ix.offsets = counts;
  ix.items.resize(counts.back());
  std::vector<std::uint32_t> fill(counts.begin(), counts.end() - 1);
  for (std::uint32_t c = 0; c < d->boxes.size(); ++c) {
    int i0, i1, j0, j1;
    range(d->boxes[c], i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) ix.items[fill[static_cast<std::size_t>(j) * ix.nx + i]++] = c;
  }
  data_ = std::move(d);
}

PWQ PWQ::single(Polygon domain, const Quadratic& q, CellTag tag) {
  Cell c;
  c.region = domain;
  c.quad = q;
  c.tag = tag;
  return PWQ(std::move(domain), {std::move(c)});
}

std::vector<std::size_t> PWQ::candidates(const Box& b) const {
  const Index& ix = data_->index;
  const double w = ix.box.width() / ix.nx, h = ix.box.height() / ix.ny;
  const int i0 = std::clamp(static_cast<int>(std::floor((b.x0 - ix.box.x0) / w)), 0, ix.nx - 1);
  const int i1 = std::clamp(static_cast<int>(std::floor((b.x1 - ix.box.x0) / w)), 0, ix.nx - 1);
  const int j0 = std::clamp(static_cast<int>(std::floor((b.y0 - ix.box.y0) / h)), 0, ix.ny - 1);
  const int j1 = std::clamp(static_cast<int>(std::floor((b.y1 - ix.box.y0) / h)), 0, ix.ny - 1);
  std::vector<std::size_t> out;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * ix.nx + i;
      for (auto t = ix.offsets[k]; t < ix.offsets[k + 1]; ++t) {
        const Box& cb = data_->boxes[ix.items[t]];
        if (cb.x1 >= b.x0 && cb.x0 <= b.x1 && cb.y1 >= b.y0 && cb.y0 <= b.y1)
          out.push_back(ix.items[t]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool PWQ::in_domain(Vec2 p, double tol) const {
  const Vec2 d = p - data_->center;
  if (dot(d, d) < 0.99 * data_->inner_radius * data_->inner_radius) return true;
  return contains(data_->domain, p, tol);
}

std::size_t PWQ::locate(Vec2 p) const {
  const double tol = 1e-12;
  if (!in_domain(p)) throw PwqError(PwqError::Kind::OutOfDomain, "point outside domain");
  const Index& ix = data_->index;
  const double w = ix.box.width() / ix.nx, h = ix.box.height() / ix.ny;
  const int i = std::clamp(static_cast<int>(std::floor((p.x - ix.box.x0) / w)), 0, ix.nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.y - ix.box.y0) / h)), 0, ix.ny - 1);
  const std::size_t k = static_cast<std::size_t>(j) * ix.nx + i;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t nearest = best;
  for (auto t = ix.offsets[k]; t < ix.offsets[k + 1]; ++t) {
    const std::uint32_t c = ix.items[t];
    if (c >= best) continue;
    if (!data_->boxes[c].contains(p, tol)) continue;
    if (contains(data_->cells[c].region, p, tol)) {
      best = c;
      continue;
    }
    // Track the least violated cell for points on slivers between cells.
    const Polygon& r = data_->cells[c].region;
    double worst = 0.0;
    for (std::size_t e = 0; e < r.size(); ++e) {
      const Vec2 a = r[e], b = r[(e + 1) % r.size()];
      worst = std::max(worst, -cross(b - a, p - a) / norm(b - a));
    }
    if (worst < best_gap) {
      best_gap = worst;
      nearest = c;
    }
  }
  if (best != std::numeric_limits<std::size_t>::max()) return best;
  if (nearest != std::numeric_limits<std::size_t>::max() && best_gap < 1e-9) return nearest;
  throw PwqError(PwqError::Kind::OutOfDomain, "point not covered by any cell");
}

double PWQ::evaluate(Vec2 p) const { return data_->cells[locate(p)].quad.value(p); }
Vec2 PWQ::gradient(Vec2 p) const { return data_->cells[locate(p)].quad.gradient(p); }
SymMat PWQ::hessian_at(Vec2 p) const { return data_->cells[locate(p)].quad.A; }

double area_where(const PWQ& f, const CellPredicate& pred) {
  double s = 0.0;
  for (const auto& c : f.cells())
    if (pred(c)) s += area(c.region);
  return s;
}

std::vector<Vec2> default_samples(const PWQ& f, const PWQ& g, int res) {
  std::vector<Vec2> pts;
  const Box b = bounding_box(f.domain());
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const Vec2 p{b.x0 + (i + 0.5) * b.width() / res, b.y0 + (j + 0.5) * b.height() / res};
      if (f.in_domain(p, 0.0)) pts.push_back(p);
    }
  }
  for (const PWQ* h : {&f, &g})
    for (const auto& c : h->cells())
      for (auto v : c.region) pts.push_back(v);
  return pts;
}

double c1_distance(const PWQ& f, const PWQ& g, const std::vector<Vec2>& samples) {
  if (f.domain().size() != g.domain().size() || std::abs(f.domain_area() - g.domain_area()) > 1e-12)
    throw PwqError(PwqError::Kind::DomainMismatch, "functions live on different domains");
  // Chunked over threads; the max is order independent.
  const unsigned nt = std::clamp(std::thread::hardware_concurrency(), 1u, 16u);
  std::vector<double> worst(nt, 0.0);
  std::vector<std::exception_ptr> err(nt);
  auto work = [&](unsigned t) {
    try {
      for (std::size_t i = t; i < samples.size(); i += nt) {
        const Vec2 p = samples[i];
        const Quadratic& qf = f.cells()[f.locate(p)].quad;
        const Quadratic& qg = g.cells()[g.locate(p)].quad;
        const double dv = std::abs(qf.value(p) - qg.value(p));
        const double dg = norm(qf.gradient(p) - qg.gradient(p));
        worst[t] = std::max(worst[t], dv + dg);
      }
    } catch (...) {
      err[t] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  return *std::max_element(worst.begin(), worst.end());
}

double monge_ampere_mass(const PWQ& f, std::span<const Vec2> region) {
  const Box rb = bounding_box(region);
  const InnerDisk inner = inner_disk(region);
  double mass = 0.0;
  for (std::size_t i : f.candidates(rb)) {
    const Cell& c = f.cells()[i];
    if (c.quad.A.min_eigenvalue() < -1e-12)
      throw PwqError(PwqError::Kind::NotConvex, "cell " + std::to_string(c.id) + " has an indefinite Hessian");
    const double a = inner.holds(c.region) ? area(c.region) : overlap_area(c.region, region);
    if (a > 0.0) mass += c.quad.A.det() * a;
  }
  return mass;
}

double boundary_mismatch(const Cell& parent, const std::vector<Cell>& children) {
  const Polygon& pr = parent.region;
  const double scale = std::max(1.0, diameter(pr));
  auto on_boundary = [&](Vec2 p) {
    for (std::size_t e = 0; e < pr.size(); ++e) {
      const Vec2 a = pr[e], b = pr[(e + 1) % pr.size()];
      const double len = norm(b - a);
      const double d = std::abs(cross(b - a, p - a)) / len;
      const double t = dot(p - a, b - a) / (len * len);
      if (d <= 1e-12 * scale && t >= -1e-12 && t <= 1 + 1e-12) return true;
    }
    return false;
  };
  double worst = 0.0;
  auto check = [&](const Quadratic& q, Vec2 p) {
    const double dv = std::abs(q.value(p) - parent.quad.value(p));
    const double dg = norm(q.gradient(p) - parent.quad.gradient(p));
    worst = std::max(worst, std::max(dv, dg));
  };
  // A quadratic along a segment is fixed by three points, its gradient by two.
  for (const auto& ch : children) {
    const Polygon& r = ch.region;
    for (std::size_t e = 0; e < r.size(); ++e) {
      const Vec2 a = r[e], b = r[(e + 1) % r.size()], m = 0.5 * (a + b);
      if (on_boundary(a) && on_boundary(b) && on_boundary(m)) {
        check(ch.quad, a);
        check(ch.quad, b);
        check(ch.quad, m);
      }
    }
  }
  return worst;
}

PWQ glue(const PWQ& f, const std::vector<Replacement>& replacements) {
  std::unordered_map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < f.cells().size(); ++i) by_id[f.cells()[i].id] = i;
  std::unordered_map<std::size_t, const std::vector<Cell>*> repl;
  const double tau_geom = kGeomRelTol * f.domain_area();
  for (const auto& [id, children] : replacements) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw PwqError(PwqError::Kind::Invalid, "no cell with id " + std::to_string(id));
    const Cell& parent = f.cells()[it->second];
    double a = 0.0;
    for (const auto& ch : children) a += area(ch.region);
    if (std::abs(a - area(parent.region)) > tau_geom)
      throw PwqError(PwqError::Kind::TilingGap, "replacement for cell " + std::to_string(id) + " misses area " +
                                                    std::to_string(area(parent.region) - a));
    if (boundary_mismatch(parent, children) > kGlueTol)
      throw PwqError(PwqError::Kind::BoundaryMismatch,
                     "replacement for cell " + std::to_string(id) + " breaks boundary data");
    repl[it->second] = &children;
  }
  std::vector<Cell> out;
  out.reserve(f.size());
  std::uint64_t next = 0;
  for (std::size_t i = 0; i < f.cells().size(); ++i) {
    auto it = repl.find(i);
    if (it == repl.end()) {
      out.push_back(f.cells()[i]);
      out.back().id = next++;
      continue;
    }
    for (const auto& ch : *it->second) {
      out.push_back(ch);
      out.back().id = next++;
    }
  }
  return PWQ(f.domain(), std::move(out));
}

ValidationReport validate(const PWQ& f) {
  ValidationReport rep;
  rep.cell_count = f.size();
  const double tau_geom = kGeomRelTol * f.domain_area();
  auto fail = [&rep](std::string msg) {
    rep.ok = false;
    if (rep.failures.size() < 32) rep.failures.push_back(std::move(msg));
  };
  double total = 0.0;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const auto& c : f.cells()) {
    if (!is_convex_ccw(c.region)) fail("cell " + std::to_string(c.id) + " is not a convex ccw polygon");
    total += area(c.region);
    for (auto v : c.region)
      if (!f.in_domain(v, 1e-9)) {
        fail("cell " + std::to_string(c.id) + " leaves the domain");
        break;
      }
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, c.quad.A.min_eigenvalue());
    rep.max_eigenvalue = std::max(rep.max_eigenvalue, c.quad.A.max_eigenvalue());
  }
  rep.area_deficit = f.domain_area() - total;
  if (std::abs(rep.area_deficit) > tau_geom) fail("cell areas do not sum to the domain area");

  // Disjointness and C^1 gluing, both through the spatial index, chunked
  // over threads. Failures are merged in cell order.
  const auto& cells = f.cells();
  const Box dom = bounding_box(f.domain());
  const double coord_scale = std::max({std::abs(dom.x0), std::abs(dom.x1), std::abs(dom.y0), std::abs(dom.y1)});
  const unsigned nt = std::clamp(std::thread::hardware_concurrency(), 1u, 16u);
  struct Partial {
    double overlap = 0.0, mismatch = 0.0;
    std::vector<std::pair<std::size_t, std::string>> failures;
  };
  std::vector<Partial> parts(nt);
  auto work = [&](unsigned t) {
    Partial& out = parts[t];
    for (std::size_t i = t; i < cells.size(); i += nt) {
      const Cell& c = cells[i];
      const Box b = bounding_box(c.region);
      const double cell_scale = std::max(b.width(), b.height());
      for (std::size_t j : f.candidates(b)) {
        if (j <= i) continue;
        const Box o = bounding_box(cells[j].region);
        const double w = std::min(b.x1, o.x1) - std::max(b.x0, o.x0);
        const double h = std::min(b.y1, o.y1) - std::max(b.y0, o.y0);
        if (w <= 1e-14 * cell_scale || h <= 1e-14 * cell_scale) continue;
        const double ov = overlap_area(c.region, cells[j].region);
        const double small = std::min(area(c.region), area(cells[j].region));
        // Thin slivers: allow vertex round-off along the shorter perimeter.
        const double slack = 1e-13 * coord_scale * std::min(perimeter(c.region), perimeter(cells[j].region));
        if (ov > 1e-9 * small + slack) {
          out.overlap += ov;
          if (out.failures.size() < 32)
            out.failures.emplace_back(i, "cells " + std::to_string(c.id) + " and " + std::to_string(cells[j].id) +
                                             " overlap");
        }
      }
      const Polygon& r = c.region;
      for (std::size_t e = 0; e < r.size(); ++e) {
        const Vec2 a = r[e], bb = r[(e + 1) % r.size()];
        const Vec2 d = bb - a;
        const double len = norm(d);
        if (len == 0.0) continue;
        const Vec2 out_n{d.y / len, -d.x / len};
        for (double s : {0.25, 0.5, 0.75}) {
          const Vec2 p = a + s * d;
          const Vec2 probe = p + (1e-9 * std::max(len, 1e-6)) * out_n;
          if (!f.in_domain(probe, 0.0)) continue;
          std::size_t k;
          try {
            k = f.locate(probe);
          } catch (const PwqError&) {
            continue;
          }
          if (k == i) continue;
          const Quadratic& q = cells[k].quad;
          const double dv = std::abs(q.value(p) - c.quad.value(p));
          const double dg = norm(q.gradient(p) - c.quad.gradient(p));
          out.mismatch = std::max(out.mismatch, std::max(dv, dg));
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  std::vector<std::pair<std::size_t, std::string>> found;
  for (Partial& p : parts) {
    rep.overlap_area += p.overlap;
    rep.worst_edge_mismatch = std::max(rep.worst_edge_mismatch, p.mismatch);
    for (auto& m : p.failures) found.push_back(std::move(m));
  }
  std::sort(found.begin(), found.end());
  for (auto& m : found) fail(std::move(m.second));
  if (rep.worst_edge_mismatch > kGlueTol) fail("C1 gluing violated across a shared edge");
  return rep;
}

}  // namespace stair
