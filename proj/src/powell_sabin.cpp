#include "stair/powell_sabin.hpp"

#include <cmath>
#include <utility>

namespace stair {

Vec2 incenter(Vec2 a, Vec2 b, Vec2 c) {
  const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
  const double s = la + lb + lc;
  return (1.0 / s) * (la * a + lb * b + lc * c);
}

Vec2 line_intersection(Vec2 z0, Vec2 z1, Vec2 a, Vec2 b) {
  const Vec2 d = z1 - z0, e = b - a;
  const double den = cross(d, e);
  const double t = cross(a - z0, e) / den;
  return z0 + t * d;
}

Quadratic quadratic_from_nodes(const std::array<Vec2, 3>& tri, const std::array<double, 6>& vals) {
  const Vec2 c = (1.0 / 3.0) * (tri[0] + tri[1] + tri[2]);
  const double s = std::max({norm(tri[1] - tri[0]), norm(tri[2] - tri[1]), norm(tri[0] - tri[2])});
  const std::array<Vec2, 6> nodes{tri[0], tri[1], tri[2], 0.5 * (tri[0] + tri[1]), 0.5 * (tri[1] + tri[2]),
                                  0.5 * (tri[2] + tri[0])};
  double m[6][7];
  for (int i = 0; i < 6; ++i) {
    const double x = (nodes[i].x - c.x) / s, y = (nodes[i].y - c.y) / s;
    const double row[7] = {1, x, y, x * x, x * y, y * y, vals[i]};
    std::copy(row, row + 7, m[i]);
  }
  for (int col = 0; col < 6; ++col) {
    int piv = col;
    for (int r = col + 1; r < 6; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 7; ++k) m[r][k] -= f * m[col][k];
    }
  }
  double a[6];
  for (int i = 0; i < 6; ++i) a[i] = m[i][6] / m[i][i];
  const double s2 = s * s;
  const SymMat h{2.0 * a[3] / s2, a[4] / s2, 2.0 * a[5] / s2};
  return Quadratic::centered(h, c, {a[1] / s, a[2] / s}, a[0]);
}

std::array<PsPiece, 6> powell_sabin(const std::array<HermiteVertex, 3>& v, const std::array<Vec2, 3>& split, Vec2 z) {
  // Bernstein-Bezier ordinates of the 6-split; see e.g. Lai & Schumaker, ch. 6.
  auto tangent = [&](int i, Vec2 x) { return v[i].f + 0.5 * dot(v[i].grad, x - v[i].p); };
  std::array<double, 3> lam{}, e{}, cr{};
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = v[i].p, b = v[(i + 1) % 3].p;
    lam[i] = dot(split[i] - a, b - a) / dot(b - a, b - a);
    e[i] = tangent(i, z);
  }
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    cr[i] = (1 - lam[i]) * tangent(i, split[i]) + lam[i] * tangent(j, split[i]);
  }
  // Barycentric coordinates of z.
  const double tot = cross(v[1].p - v[0].p, v[2].p - v[0].p);
  const double b0 = cross(v[1].p - z, v[2].p - z) / tot;
  const double b1 = cross(v[2].p - z, v[0].p - z) / tot;
  const double cz = b0 * e[0] + b1 * e[1] + (1 - b0 - b1) * e[2];

  // Value at the midpoint of an edge with end ordinates ca, cb and middle cm.
  auto mid = [](double ca, double cb, double cm) { return 0.25 * (ca + cb) + 0.5 * cm; };
  std::array<PsPiece, 6> out;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const double czr = (1 - lam[i]) * e[i] + lam[i] * e[j];
    // (v_i, r_i, z)
    {
      const double c0 = v[i].f, c1 = cr[i], c2 = cz;
      const double m01 = tangent(i, split[i]), m12 = czr, m02 = e[i];
      const std::array<Vec2, 3> t{v[i].p, split[i], z};
      out[2 * i] = {{t[0], t[1], t[2]},
                    quadratic_from_nodes(t, {c0, c1, c2, mid(c0, c1, m01), mid(c1, c2, m12), mid(c0, c2, m02)})};
    }
    // (r_i, v_j, z)
    {
      const double c0 = cr[i], c1 = v[j].f, c2 = cz;
      const double m01 = tangent(j, split[i]), m12 = e[j], m02 = czr;
      const std::array<Vec2, 3> t{split[i], v[j].p, z};
      out[2 * i + 1] = {{t[0], t[1], t[2]},
                        quadratic_from_nodes(t, {c0, c1, c2, mid(c0, c1, m01), mid(c1, c2, m12), mid(c0, c2, m02)})};
    }
  }
  for (auto& piece : out)
    if (signed_area(piece.tri) < 0) std::swap(piece.tri[1], piece.tri[2]);
  return out;
}

}  // namespace stair
