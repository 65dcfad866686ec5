#pragma once

// Exact algebra of diagonal 2x2 matrices, atomic measures built by
// elementary splitting, and the staircase schedule.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stair {

using Rational = boost::multiprecision::cpp_rational;

double to_double(const Rational& q);
std::string to_string(const Rational& q);
/// 2^k for any integer k, exactly.
Rational pow2(int k);
Rational pow10(int k);

struct DiagMat {
  Rational x;
  Rational y;

  friend bool operator==(const DiagMat&, const DiagMat&) = default;
  Rational det() const { return x * y; }
};

DiagMat operator+(const DiagMat& a, const DiagMat& b);
DiagMat operator-(const DiagMat& a, const DiagMat& b);
DiagMat operator*(const Rational& s, const DiagMat& a);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct SymMat {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  friend bool operator==(const SymMat&, const SymMat&) = default;

  double det() const { return a11 * a22 - a12 * a12; }
  double trace() const { return a11 + a22; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
};

SymMat to_sym(const DiagMat& d);
SymMat operator+(const SymMat& a, const SymMat& b);
SymMat operator-(const SymMat& a, const SymMat& b);
/// Max-entry norm distance.
double distance(const SymMat& a, const SymMat& b);

/// Direction of P - Q when it has rank exactly one.
std::optional<Vec2> rank_one_connected(const SymMat& p, const SymMat& q);

/// Axis along which two diagonal matrices differ, if exactly one entry differs.
enum class Axis { X, Y };
std::optional<Axis> rank_one_axis(const DiagMat& p, const DiagMat& q);

class LaminateError : public std::runtime_error {
 public:
  enum class Kind { NotRankOne, NotOnSegment, BadWeight, NoSuchAtom };
  LaminateError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Atom {
  Rational weight;
  DiagMat matrix;
};

/// One elementary split: `split` = s*b + (1-s)*c along `axis`, applied to a
/// fraction `lambda` of the atom's mass.
struct SplitRecord {
  DiagMat split;
  DiagMat b;
  DiagMat c;
  Rational s;
  Rational lambda;
  Axis axis;
};

class Laminate {
 public:
  static Laminate dirac(const DiagMat& a);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<SplitRecord>& provenance() const { return provenance_; }

  Rational total_weight() const;
  DiagMat barycenter() const;
  /// Weight carried by `m`, zero if absent.
  Rational weight_of(const DiagMat& m) const;
  std::optional<std::size_t> index_of(const DiagMat& m) const;

  friend Laminate elementary_split(const Laminate& nu, std::size_t i, const DiagMat& b,
                                   const DiagMat& c, const Rational& lambda);

 private:
  std::vector<Atom> atoms_;
  std::vector<SplitRecord> provenance_;
};

Laminate elementary_split(const Laminate& nu, std::size_t i, const DiagMat& b, const DiagMat& c,
                          const Rational& lambda);

struct StaircaseSchedule {
  int n = 0;
  Rational x, y, b, z, eps;
  Rational x_next, y_next;
  DiagMat A, B, C;
  /// (x_{n+1}, y_n): the intermediate atom of the horizontal split.
  DiagMat D;
  Rational alpha, beta, gamma;
  /// Weight of D in the horizontal split and of A_{n+1} in the vertical one.
  Rational horizontal_weight, vertical_weight;
};

StaircaseSchedule schedule(int n);
/// eps_n = 10^-n.
Rational epsilon(int n);
Laminate staircase(int n);

struct ProductPartials {
  int n = 0;
  Rational k0, k0p, k1, k2, t;
  /// Sum of |a_i| over the factors (1 + a_i) of each product.
  Rational sum_k0, sum_k0p, sum_k1, sum_k2;
};

struct ProductsReport {
  int n = 0;
  /// Exact up to min(n, kExactCap); beyond that long double.
  ProductPartials exact;
  long double k0 = 0, k0p = 0, k1 = 0, k2 = 0, t = 0;
  long double sum_k0 = 0, sum_k0p = 0, sum_k1 = 0, sum_k2 = 0;
  /// Relative error bound of the floating continuation (zero when exact).
  long double float_error_bound = 0;
};

inline constexpr int kExactCap = 64;

ProductPartials exact_partial_products(int n);
ProductsReport partial_products(int n);

}  // namespace stair
