#pragma once

// Powell-Sabin C^1 quadratic Hermite elements (6-split).
//
// Each macro triangle is split at an interior point Z and one point per edge.
// The spline is determined by values and gradients at the three vertices,
// reproduces quadratics, and has a cross-boundary derivative that is linear
// along every edge. Two macro triangles sharing an edge glue C^1 when the
// shared split point lies on the segment joining their interior points.

#include "stair/pwq.hpp"

#include <array>

namespace stair {

struct HermiteVertex {
  Vec2 p;
  double f = 0.0;
  Vec2 grad;
};

struct PsPiece {
  Polygon tri;
  Quadratic quad;
};

Vec2 incenter(Vec2 a, Vec2 b, Vec2 c);

/// Intersection of segment [z0, z1] with the line through a, b.
Vec2 line_intersection(Vec2 z0, Vec2 z1, Vec2 a, Vec2 b);

/// Quadratic through six values at the vertices and edge midpoints of a triangle.
Quadratic quadratic_from_nodes(const std::array<Vec2, 3>& tri, const std::array<double, 6>& vertex_then_mid);

/// split[i] lies on edge (v[i], v[i+1]); z is interior. Output triangles are ccw.
std::array<PsPiece, 6> powell_sabin(const std::array<HermiteVertex, 3>& v, const std::array<Vec2, 3>& split, Vec2 z);

}  // namespace stair
