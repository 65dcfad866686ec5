#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "stair/split.hpp"

#include <random>

namespace stair::testing {

struct SplitInstance {
  Box box;
  DiagMat a, b, c;
  Rational lambda;
  SplitConfig cfg;
};

/// Admissible axis-aligned instance: B and C differ along one axis by more
/// than 2 eps, both positive definite.
inline SplitInstance random_instance(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  SplitInstance s;
  const double w = pick(5, 20) / 10.0, h = pick(5, 20) / 10.0;
  const double x0 = pick(-10, 10) / 10.0, y0 = pick(-10, 10) / 10.0;
  s.box = {x0, y0, x0 + w, y0 + h};
  s.lambda = Rational(pick(3, 7), 10);
  s.cfg.eps = Rational(1, pick(0, 1) ? 5 : 10);
  s.cfg.eta = Rational(1, pick(0, 1) ? 10 : 20);
  const Rational gap(pick(2, 8), 4);
  const Rational base(pick(2, 8), 4), other(pick(1, 8), 4);
  const bool along_x = pick(0, 1);
  // C on the low side, B = C + gap; both stay positive.
  const Rational c_main = base, b_main = base + gap;
  s.b = along_x ? DiagMat{b_main, other} : DiagMat{other, b_main};
  s.c = along_x ? DiagMat{c_main, other} : DiagMat{other, c_main};
  s.a = s.lambda * s.b + (1 - s.lambda) * s.c;
  return s;
}

inline Cell cell_for(const SplitInstance& s) {
  Cell cell;
  cell.region = rectangle(s.box);
  // Arbitrary affine part so boundary data is not trivially zero.
  cell.quad = Quadratic::centered(to_sym(s.a), {0.3, -0.2}, {0.1, 0.25}, 0.7);
  return cell;
}

struct SplitMeasures {
  double exact_b = 0.0, near_b = 0.0, area = 0.0, mismatch = 0.0, c1 = 0.0;
  bool valid = false;
};

/// Independent measurement of the split contract quantities.
inline SplitMeasures measure_split(const SplitInstance& s, const std::vector<Cell>& cells, double eps) {
  const Cell parent = cell_for(s);
  SplitMeasures m;
  m.area = area(parent.region);
  const SymMat b = to_sym(s.b);
  for (const Cell& c : cells) {
    const double d = distance(c.quad.A, b);
    const double ar = area(c.region);
    if (d <= 1e-12) m.exact_b += ar;
    if (d <= eps) m.near_b += ar;
  }
  m.mismatch = boundary_mismatch(parent, cells);
  const PWQ f(parent.region, cells), g = PWQ::single(parent.region, parent.quad);
  m.valid = validate(f).ok;
  m.c1 = c1_distance(f, g, default_samples(f, g, 128));
  return m;
}

}  // namespace stair::testing
