#pragma once

// Convex polygon utilities in double precision.

#include "stair/lamalg.hpp"

#include <span>
#include <vector>

namespace stair {

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

struct Box {
  double x0, y0, x1, y1;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Vec2 p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
};

/// Counterclockwise convex polygon.
using Polygon = std::vector<Vec2>;

double signed_area(std::span<const Vec2> poly);
double area(std::span<const Vec2> poly);
double perimeter(std::span<const Vec2> poly);
double diameter(std::span<const Vec2> poly);
Vec2 centroid(std::span<const Vec2> poly);
Box bounding_box(std::span<const Vec2> poly);
bool is_convex_ccw(std::span<const Vec2> poly, double tol = 1e-12);
/// Inclusive point-in-convex-polygon test; `tol` is a distance.
bool contains(std::span<const Vec2> poly, Vec2 p, double tol = 1e-12);
/// Clip a convex polygon by a convex polygon (Sutherland-Hodgman).
Polygon clip(std::span<const Vec2> subject, std::span<const Vec2> clipper);
Polygon rectangle(const Box& b);
/// If `poly` is an axis-aligned rectangle, return its box.
std::optional<Box> as_box(std::span<const Vec2> poly, double tol = 1e-12);
/// Regular n-gon inscribed in the circle of radius r about the origin.
Polygon regular_polygon(int n, double r = 1.0);
/// Area of the intersection of the interiors of two convex polygons.
double overlap_area(std::span<const Vec2> a, std::span<const Vec2> b);

/// Disk about the centroid of a convex polygon that touches its nearest edge.
struct InnerDisk {
  Vec2 center;
  double radius = 0.0;
  /// True when every vertex of `poly` is strictly inside the disk.
  bool holds(std::span<const Vec2> poly) const;
};
InnerDisk inner_disk(std::span<const Vec2> convex);

}  // namespace stair
