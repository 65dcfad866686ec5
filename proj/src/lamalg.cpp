#include "stair/lamalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stair {

double to_double(const Rational& q) { return q.convert_to<double>(); }

std::string to_string(const Rational& q) {
  std::string s = numerator(q).str();
  if (denominator(q) != 1) s += "/" + denominator(q).str();
  return s;
}

Rational pow2(int k) {
  using boost::multiprecision::cpp_int;
  cpp_int p = cpp_int(1) << std::abs(k);
  return k >= 0 ? Rational(p) : Rational(cpp_int(1), p);
}

Rational pow10(int k) {
  using boost::multiprecision::cpp_int;
  cpp_int p = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::abs(k)));
  return k >= 0 ? Rational(p) : Rational(cpp_int(1), p);
}

DiagMat operator+(const DiagMat& a, const DiagMat& b) { return {a.x + b.x, a.y + b.y}; }
DiagMat operator-(const DiagMat& a, const DiagMat& b) { return {a.x - b.x, a.y - b.y}; }
DiagMat operator*(const Rational& s, const DiagMat& a) { return {s * a.x, s * a.y}; }

double SymMat::min_eigenvalue() const {
  const double m = 0.5 * (a11 + a22);
  const double r = std::hypot(0.5 * (a11 - a22), a12);
  return m - r;
}

double SymMat::max_eigenvalue() const {
  const double m = 0.5 * (a11 + a22);
  const double r = std::hypot(0.5 * (a11 - a22), a12);
  return m + r;
}

SymMat to_sym(const DiagMat& d) { return {to_double(d.x), 0.0, to_double(d.y)}; }
SymMat operator+(const SymMat& a, const SymMat& b) {
  return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22};
}
SymMat operator-(const SymMat& a, const SymMat& b) {
  return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22};
}

double distance(const SymMat& a, const SymMat& b) {
  return std::max({std::abs(a.a11 - b.a11), std::abs(a.a12 - b.a12), std::abs(a.a22 - b.a22)});
}

std::optional<Vec2> rank_one_connected(const SymMat& p, const SymMat& q) {
  const SymMat d = p - q;
  const double scale = std::max({std::abs(d.a11), std::abs(d.a12), std::abs(d.a22)});
  if (scale == 0.0) return std::nullopt;
  if (std::abs(d.det()) > 1e-14 * scale * scale) return std::nullopt;
  // d = sigma * v v^T; read v off the dominant row.
  Vec2 v = std::abs(d.a11) >= std::abs(d.a22) ? Vec2{d.a11, d.a12} : Vec2{d.a12, d.a22};
  const double len = std::hypot(v.x, v.y);
  v = {v.x / len, v.y / len};
  if (v.x < 0 || (v.x == 0 && v.y < 0)) v = {-v.x, -v.y};
  return v;
}

std::optional<Axis> rank_one_axis(const DiagMat& p, const DiagMat& q) {
  const bool dx = p.x != q.x;
  const bool dy = p.y != q.y;
  if (dx == dy) return std::nullopt;
  return dx ? Axis::X : Axis::Y;
}

Laminate Laminate::dirac(const DiagMat& a) {
  Laminate nu;
  nu.atoms_.push_back({Rational(1), a});
  return nu;
}

Rational Laminate::total_weight() const {
  Rational w = 0;
  for (const auto& a : atoms_) w += a.weight;
  return w;
}

DiagMat Laminate::barycenter() const {
  DiagMat m{0, 0};
  for (const auto& a : atoms_) m = m + a.weight * a.matrix;
  return m;
}

Rational Laminate::weight_of(const DiagMat& m) const {
  auto idx = index_of(m);
  return idx ? atoms_[*idx].weight : Rational(0);
}

std::optional<std::size_t> Laminate::index_of(const DiagMat& m) const {
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if (atoms_[i].matrix == m) return i;
  return std::nullopt;
}

Laminate elementary_split(const Laminate& nu, std::size_t i, const DiagMat& b, const DiagMat& c,
                          const Rational& lambda) {
  using Kind = LaminateError::Kind;
  if (i >= nu.atoms_.size()) throw LaminateError(Kind::NoSuchAtom, "atom index out of range");
  if (lambda < 0 || lambda > 1) throw LaminateError(Kind::BadWeight, "lambda outside [0,1]");
  const auto axis = rank_one_axis(b, c);
  if (!axis) throw LaminateError(Kind::NotRankOne, "B - C does not have rank one");

  const DiagMat& a = nu.atoms_[i].matrix;
  // Exact colinearity: the fixed entry must agree, the moving one gives s.
  Rational s;
  if (*axis == Axis::X) {
    if (a.y != b.y) throw LaminateError(Kind::NotOnSegment, "A is off the line through B, C");
    s = (a.x - c.x) / (b.x - c.x);
  } else {
    if (a.x != b.x) throw LaminateError(Kind::NotOnSegment, "A is off the line through B, C");
    s = (a.y - c.y) / (b.y - c.y);
  }
  if (s <= 0 || s >= 1) throw LaminateError(Kind::NotOnSegment, "no s in (0,1) with A = sB + (1-s)C");

  Laminate out = nu;
  if (lambda == 0) return out;
  const Rational moved = lambda * nu.atoms_[i].weight;
  out.atoms_[i].weight -= moved;
  auto deposit = [&out](const DiagMat& m, const Rational& w) {
    if (w == 0) return;
    for (auto& at : out.atoms_) {
      if (at.matrix == m) {
        at.weight += w;
        return;
      }
    }
    out.atoms_.push_back({w, m});
  };
  deposit(b, moved * s);
  deposit(c, moved * (1 - s));
  std::erase_if(out.atoms_, [](const Atom& at) { return at.weight == 0; });
  out.provenance_.push_back({a, b, c, s, lambda, *axis});
  return out;
}

Rational epsilon(int n) { return pow10(-n); }

StaircaseSchedule schedule(int n) {
  if (n < 0) throw std::invalid_argument("schedule index must be non-negative");
  auto closed = [](int k, Rational& x, Rational& y, Rational& b, Rational& z) {
    if (k == 0) {
      x = Rational(1, 2);
      y = Rational(1, 2);
      b = Rational(3, 4);
      z = Rational(1, 8);
    } else {
      x = pow2(-2 * k);
      y = pow2(k);
      b = Rational(3, 4) * pow2(-k);
      z = pow2(-2 * k);
    }
  };
  StaircaseSchedule s;
  s.n = n;
  closed(n, s.x, s.y, s.b, s.z);
  Rational bn, zn;
  closed(n + 1, s.x_next, s.y_next, bn, zn);
  s.eps = epsilon(n);
  s.A = {s.x, s.y};
  s.B = {s.x_next, s.z};
  s.C = {s.b, s.y};
  s.D = {s.x_next, s.y};
  s.horizontal_weight = (s.b - s.x) / (s.b - s.x_next);
  s.vertical_weight = (s.y - s.z) / (s.y_next - s.z);
  s.alpha = s.horizontal_weight * s.vertical_weight;
  s.beta = s.horizontal_weight * (s.y_next - s.y) / (s.y_next - s.z);
  s.gamma = (s.x - s.x_next) / (s.b - s.x_next);
  return s;
}

Laminate staircase(int n) {
  const StaircaseSchedule s = schedule(n);
  Laminate nu = Laminate::dirac(s.A);
  // Horizontal split first, then the vertical split of the intermediate atom.
  nu = elementary_split(nu, 0, s.D, s.C, Rational(1));
  nu = elementary_split(nu, *nu.index_of(s.D), DiagMat{s.x_next, s.y_next}, s.B, Rational(1));
  return nu;
}

ProductPartials exact_partial_products(int n) {
  if (n < 1) throw std::invalid_argument("product depth must be >= 1");
  ProductPartials p;
  p.n = n;
  p.k0 = p.k0p = p.k1 = p.k2 = p.t = 1;
  p.sum_k0 = p.sum_k0p = p.sum_k1 = p.sum_k2 = 0;
  auto abs_q = [](const Rational& q) { return q < 0 ? Rational(-q) : q; };
  for (int i = 1; i <= n; ++i) {
    const StaircaseSchedule s = schedule(i);
    const Rational e = epsilon(i);
    const Rational f0 = (1 - e) * (1 - e);
    const Rational f1 = (s.b - s.x) / (s.b - s.x_next);
    const Rational f2 = (1 - s.z / s.y) / (1 - s.z / s.y_next);
    p.k0 *= f0;
    p.k0p *= 1 + e;
    p.k1 *= f1;
    p.k2 *= f2;
    p.t *= s.alpha;
    p.sum_k0 += abs_q(f0 - 1);
    p.sum_k0p += e;
    p.sum_k1 += abs_q(f1 - 1);
    p.sum_k2 += abs_q(f2 - 1);
  }
  p.t *= pow2(n + 1);
  return p;
}

ProductsReport partial_products(int n) {
  ProductsReport r;
  r.n = n;
  r.exact = exact_partial_products(std::min(n, kExactCap));
  auto ld = [](const Rational& q) { return q.convert_to<long double>(); };
  r.k0 = ld(r.exact.k0);
  r.k0p = ld(r.exact.k0p);
  r.k1 = ld(r.exact.k1);
  r.k2 = ld(r.exact.k2);
  r.t = ld(r.exact.t);
  r.sum_k0 = ld(r.exact.sum_k0);
  r.sum_k0p = ld(r.exact.sum_k0p);
  r.sum_k1 = ld(r.exact.sum_k1);
  r.sum_k2 = ld(r.exact.sum_k2);
  // Float continuation: each factor is exact to one rounding, so 4 ulps per
  // step bounds the relative drift.
  const long double ulp = std::numeric_limits<long double>::epsilon();
  for (int i = kExactCap + 1; i <= n; ++i) {
    const long double e = std::pow(10.0L, -i);
    const long double x = std::ldexp(1.0L, -2 * i), xn = std::ldexp(1.0L, -2 * (i + 1));
    const long double y = std::ldexp(1.0L, i), yn = std::ldexp(1.0L, i + 1);
    const long double b = 0.75L * std::ldexp(1.0L, -i), z = x;
    const long double f0 = (1 - e) * (1 - e);
    const long double f1 = (b - x) / (b - xn);
    const long double f2 = (1 - z / y) / (1 - z / yn);
    const long double alpha = f1 * (y - z) / (yn - z);
    r.k0 *= f0;
    r.k0p *= 1 + e;
    r.k1 *= f1;
    r.k2 *= f2;
    r.t *= 2 * alpha;
    r.sum_k0 += std::fabs(f0 - 1);
    r.sum_k0p += e;
    r.sum_k1 += std::fabs(f1 - 1);
    r.sum_k2 += std::fabs(f2 - 1);
    r.float_error_bound += 8 * ulp;
  }
  return r;
}

}  // namespace stair
