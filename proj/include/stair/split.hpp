#pragma once

// Realization of rank-one splits of a quadratic cell as C^1 piecewise
// quadratics with prescribed boundary data.
//
// A split of A = lambda*B + (1-lambda)*C along axis e is realized by a
// periodic sawtooth in the second derivative along e on the core of the cell
// (exact B and C pieces). Near the two sides transverse to e the sawtooth is
// faded out by perspective tapers (Hessians within eps of B or C) followed by
// a Powell-Sabin interface whose Hessians stay near the segment [B, C]; the
// correction and its gradient vanish on the cell boundary.

#include "stair/pwq.hpp"

#include <functional>

namespace stair {

class SplitError : public std::runtime_error {
 public:
  enum class Kind { NotRankOne, NotBarycenter, NotAxisAligned, DegenerateWeight, BudgetInfeasible, InvalidConfig };
  SplitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct SplitConfig {
  /// Ball radius for Hessians and C^1 closeness.
  Rational eps{1, 10};
  /// Area fraction allowed outside the exact atoms (per split).
  Rational eta{1, 1000};
  int min_strips = 1;
  int max_strips_log2 = 20;
  /// Recursion depth for re-covering the uncovered boundary triangles with
  /// rescaled copies of the split.
  int boundary_layers = 0;
  /// Shrink eps to 0.45*|B - C| when the two eps-balls would overlap,
  /// instead of failing.
  bool clamp_eps = false;
  /// Cell budget for one split or laminate application (0: unlimited).
  std::size_t max_cells = 0;
};

/// Labels attached to the children of a split.
struct SplitLabels {
  int n_b = 0;
  Which which_b = Which::B;
  int n_c = 0;
  Which which_c = Which::C;
  int n_residual = 0;
};

struct SplitResult {
  std::vector<Cell> cells;
  int strips = 0;
  /// Strip width over taper height.
  double kappa = 0.0;
  /// Radius actually used (differs from the config only when clamped).
  double eps_used = 0.0;
  /// Certified bound on |g| + |Dg| of the correction.
  double c1_bound = 0.0;
  double exact_b_area = 0.0;
  double exact_c_area = 0.0;
  double residual_area = 0.0;
};

SplitResult split_cell_detailed(const Cell& cell, const DiagMat& b, const DiagMat& c, const Rational& lambda,
                                const SplitConfig& cfg, const SplitLabels& labels = {});

/// Radius a split of B, C runs with under `cfg` (eps, or its clamp).
double effective_eps(const DiagMat& b, const DiagMat& c, const SplitConfig& cfg);

std::vector<Cell> split_cell(const Cell& cell, const DiagMat& b, const DiagMat& c, const Rational& lambda,
                             const SplitConfig& cfg, const SplitLabels& labels = {});

/// Maps an exact atom matrix to its (index, which) label.
using AtomLabeler = std::function<std::pair<int, Which>(const DiagMat&)>;
AtomLabeler staircase_labeler(int n);

/// Replays the provenance of `nu` on `cell`: every split hits every cell
/// whose exact Hessian equals the atom being split.
std::vector<Cell> apply_laminate(const Cell& cell, const Laminate& nu, const SplitConfig& cfg,
                                 const AtomLabeler& labeler, int residual_n);
std::vector<Cell> apply_laminate(const Cell& cell, const Laminate& nu, const SplitConfig& cfg);

struct TilingResult {
  std::vector<Polygon> squares;
  double coverage = 0.0;
};

class TilingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic grid of axis-aligned squares separated by gaps inside a
/// convex region. Throws TilingError when the gap makes the target unreachable.
TilingResult tile_with_squares(std::span<const Vec2> region, double max_side, double gap_fraction,
                               double coverage_target);

}  // namespace stair
