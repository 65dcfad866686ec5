#pragma once

// Finite-depth checks of the staircase construction and independent oracles.

#include "stair/engine.hpp"

namespace stair {

struct Check {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double bound = 0.0;
  /// "schedule-exact", "run-derived" or "contract".
  std::string bound_source;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;
  bool pass() const;
  void add(Check c) { checks.push_back(std::move(c)); }
  void merge(const Report& other);
};

struct DetBounds {
  double min = 0.0, max = 0.0;
  /// Exact determinant of every atom-tagged cell matched its schedule value.
  bool atoms_exact = true;
};
DetBounds det_bounds(const PWQ& u);
Report det_bounds_check(const PWQ& u);

/// Minimum eigenvalue over all cell Hessians.
double convexity_spectrum(const PWQ& u);

/// Sum of a22 * area over the Omega cells against y_j |Omega_j|.
Report mass_identity(const IterationState& state);

struct ProductLimits {
  int n = 0;
  std::vector<double> k0, k0p, k1, k2, t;  // index N = 1..n
  double sum_k0 = 0, sum_k0p = 0, sum_k1 = 0, sum_k2 = 0;
};
ProductLimits product_limits(int n);

/// Window for y_j |Omega_j| built from the exact product prediction and the
/// run's own eps, eta and coverage.
struct Window {
  double lo = 0.0, hi = 0.0, prediction = 0.0;
};
Window concentration_window(const std::vector<MetricsRow>& rows, std::size_t k, double eta);

Report bracket_check(const std::vector<MetricsRow>& rows, const ProductLimits& limits, double eta);
Report c1_cauchy_check(const Trajectory& tr);

struct Segment {
  Vec2 p, q;
};
/// Deterministic segments of length in [0.05, 1] inside the domain.
std::vector<Segment> probe_segments(const PWQ& u, int count, std::uint64_t seed = 1);
Report strict_convexity_probe(const PWQ& u, const std::vector<Segment>& segments, double rho);

struct OracleResult {
  double estimate = 0.0;
  double bound = 0.0;  // discretization bound on |estimate - exact|
};
/// Area of the gradient image of `region`, by rasterizing each cell's image.
OracleResult subgradient_oracle(const PWQ& u, std::span<const Vec2> region, int resolution);

Report singularity_report(const std::vector<MetricsRow>& rows);

/// Every check on a trajectory; `fast` skips the subgradient oracle.
Report verify_all(const Trajectory& tr, const RunConfig& cfg, bool fast);

}  // namespace stair
