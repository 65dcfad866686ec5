#include "stair/lamalg.hpp"

#include <gtest/gtest.h>

using namespace stair;

namespace {

// Closed forms, written out independently of the library.
Rational q_pow(Rational b, int e) {
  Rational r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}
Rational x_of(int n) { return n == 0 ? Rational(1, 2) : q_pow(Rational(1, 4), n); }
Rational y_of(int n) { return n == 0 ? Rational(1, 2) : q_pow(Rational(2), n); }
Rational b_of(int n) { return n == 0 ? Rational(3, 4) : Rational(3, 4) * q_pow(Rational(1, 2), n); }
Rational z_of(int n) { return n == 0 ? Rational(1, 8) : q_pow(Rational(1, 4), n); }

}  // namespace

TEST(Schedule, ClosedForms) {
  for (int n = 0; n <= 10; ++n) {
    const StaircaseSchedule s = schedule(n);
    EXPECT_EQ(s.x, x_of(n));
    EXPECT_EQ(s.y, y_of(n));
    EXPECT_EQ(s.b, b_of(n));
    EXPECT_EQ(s.z, z_of(n));
    const Rational h = (b_of(n) - x_of(n)) / (b_of(n) - x_of(n + 1));
    const Rational v = (y_of(n) - z_of(n)) / (y_of(n + 1) - z_of(n));
    EXPECT_EQ(s.alpha, h * v);
    EXPECT_EQ(s.beta, h * (1 - v));
    EXPECT_EQ(s.gamma, 1 - h);
    EXPECT_EQ(s.alpha + s.beta + s.gamma, 1);
    EXPECT_EQ(epsilon(n + 1), q_pow(Rational(1, 10), n + 1));
  }
}

TEST(Schedule, FirstWeights) {
  const StaircaseSchedule s0 = schedule(0);
  EXPECT_EQ(s0.alpha, Rational(1, 10));
  EXPECT_EQ(s0.beta, Rational(2, 5));
  EXPECT_EQ(s0.gamma, Rational(1, 2));
  EXPECT_EQ(schedule(1).alpha, Rational(14, 75));
}

TEST(Schedule, NegativeIndexThrows) { EXPECT_THROW(schedule(-1), std::invalid_argument); }

TEST(Laminate, BarycenterIsAn) {
  for (int n = 0; n <= 40; ++n) {
    const Laminate nu = staircase(n);
    ASSERT_EQ(nu.atoms().size(), 3u);
    EXPECT_EQ(nu.barycenter(), (DiagMat{x_of(n), y_of(n)}));
    Rational total = 0;
    for (const Atom& a : nu.atoms()) total += a.weight;
    EXPECT_EQ(total, 1);
  }
}

TEST(Laminate, AtomDeterminants) {
  EXPECT_EQ(schedule(0).C.det(), Rational(3, 8));
  for (int k = 1; k <= 12; ++k) {
    const StaircaseSchedule s = schedule(k);
    EXPECT_EQ(s.C.det(), Rational(3, 4));
    EXPECT_EQ(s.B.det(), q_pow(Rational(1, 4), 2 * k + 1));
    EXPECT_EQ(s.A.det(), q_pow(Rational(1, 2), k));
  }
}

TEST(Laminate, RankOneAxis) {
  const StaircaseSchedule s = schedule(3);
  EXPECT_EQ(rank_one_axis(s.A, s.C), Axis::X);
  EXPECT_EQ(rank_one_axis(s.D, s.B), Axis::Y);
  EXPECT_FALSE(rank_one_axis(s.B, s.C).has_value());
  EXPECT_FALSE(rank_one_connected(to_sym(DiagMat{1, 1}), to_sym(DiagMat{2, 2})).has_value());
}

TEST(Laminate, ElementarySplitRejectsNonRankOne) {
  const Laminate nu = Laminate::dirac(DiagMat{1, 1});
  EXPECT_THROW(elementary_split(nu, 0, DiagMat{2, 2}, DiagMat{0, 0}, Rational(1, 2)), LaminateError);
}

TEST(Products, TOne) {
  EXPECT_EQ(exact_partial_products(1).t, Rational(56, 75));
  EXPECT_THROW(exact_partial_products(0), std::invalid_argument);
}

TEST(Products, IndependentOracle) {
  Rational k0 = 1, k1 = 1, k2 = 1, t = 1;
  for (int i = 1; i <= 20; ++i) {
    const Rational e = q_pow(Rational(1, 10), i);
    k0 *= (1 - e) * (1 - e);
    k1 *= (b_of(i) - x_of(i)) / (b_of(i) - x_of(i + 1));
    k2 *= (1 - z_of(i) / y_of(i)) / (1 - z_of(i) / y_of(i + 1));
    t *= (b_of(i) - x_of(i)) / (b_of(i) - x_of(i + 1)) * (y_of(i) - z_of(i)) / (y_of(i + 1) - z_of(i));
  }
  t *= q_pow(Rational(2), 21);
  const ProductPartials p = exact_partial_products(20);
  EXPECT_EQ(p.k0, k0);
  EXPECT_EQ(p.k1, k1);
  EXPECT_EQ(p.k2, k2);
  EXPECT_EQ(p.t, t);
  const double t20 = to_double(t);
  EXPECT_GE(t20, 0.40);
  EXPECT_LE(t20, 0.42);
}

TEST(Products, FloatContinuation) {
  const ProductsReport r = partial_products(80);
  EXPECT_GT(r.float_error_bound, 0.0L);
  EXPECT_NEAR(static_cast<double>(r.t), to_double(exact_partial_products(40).t), 1e-10);
}
