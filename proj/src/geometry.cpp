#include "stair/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stair {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double signed_area(std::span<const Vec2> poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * s;
}

double area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

double perimeter(std::span<const Vec2> poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) s += norm(poly[(i + 1) % poly.size()] - poly[i]);
  return s;
}

double diameter(std::span<const Vec2> poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, norm(poly[i] - poly[j]));
  return d;
}

Vec2 centroid(std::span<const Vec2> poly) {
  const double a = signed_area(poly);
  if (a == 0.0) {
    Vec2 c{};
    for (auto p : poly) c = c + p;
    return (1.0 / static_cast<double>(poly.size())) * c;
  }
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
    const double w = cross(p, q);
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

Box bounding_box(std::span<const Vec2> poly) {
  Box b{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
  for (auto p : poly) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

bool is_convex_ccw(std::span<const Vec2> poly, double tol) {
  if (poly.size() < 3) return false;
  const double scale = std::max(1.0, diameter(poly));
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()], c = poly[(i + 2) % poly.size()];
    if (cross(b - a, c - b) < -tol * scale * scale) return false;
  }
  return signed_area(poly) > 0.0;
}

bool contains(std::span<const Vec2> poly, Vec2 p, double tol) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 e = b - a;
    const double len = norm(e);
    if (len == 0.0) continue;
    if (cross(e, p - a) / len < -tol) return false;
  }
  return true;
}

Polygon clip(std::span<const Vec2> subject, std::span<const Vec2> clipper) {
  Polygon out(subject.begin(), subject.end());
  for (std::size_t i = 0; i < clipper.size() && !out.empty(); ++i) {
    const Vec2 a = clipper[i], b = clipper[(i + 1) % clipper.size()];
    const Vec2 e = b - a;
    Polygon in = std::move(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Vec2 p = in[k], q = in[(k + 1) % in.size()];
      const double sp = cross(e, p - a), sq = cross(e, q - a);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  // Drop near-duplicate vertices produced by the clipping.
  Polygon clean;
  for (auto p : out)
    if (clean.empty() || norm(p - clean.back()) > 1e-15) clean.push_back(p);
  while (clean.size() > 1 && norm(clean.front() - clean.back()) <= 1e-15) clean.pop_back();
  if (clean.size() < 3) clean.clear();
  return clean;
}

Polygon rectangle(const Box& b) { return {{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}}; }

std::optional<Box> as_box(std::span<const Vec2> poly, double tol) {
  if (poly.size() != 4) return std::nullopt;
  const Box b = bounding_box(poly);
  for (auto p : poly) {
    const bool on_x = std::abs(p.x - b.x0) <= tol || std::abs(p.x - b.x1) <= tol;
    const bool on_y = std::abs(p.y - b.y0) <= tol || std::abs(p.y - b.y1) <= tol;
    if (!on_x || !on_y) return std::nullopt;
  }
  if (b.width() <= 0 || b.height() <= 0) return std::nullopt;
  return b;
}

Polygon regular_polygon(int n, double r) {
  Polygon p;
  p.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    p.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return p;
}

double overlap_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  const Polygon c = clip(a, b);
  return c.empty() ? 0.0 : area(c);
}

bool InnerDisk::holds(std::span<const Vec2> poly) const {
  return std::all_of(poly.begin(), poly.end(), [&](Vec2 v) { return norm(v - center) < radius; });
}

InnerDisk inner_disk(std::span<const Vec2> convex) {
  InnerDisk d{centroid(convex), INFINITY};
  for (std::size_t e = 0; e < convex.size(); ++e) {
    const Vec2 a = convex[e], b = convex[(e + 1) % convex.size()];
    d.radius = std::min(d.radius, std::abs(cross(b - a, d.center - a)) / norm(b - a));
  }
  d.radius *= 1.0 - 1e-12;
  return d;
}

}  // namespace stair
