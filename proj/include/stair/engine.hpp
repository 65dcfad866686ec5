#pragma once

// The inductive staircase scheme on the polygonal unit disk: base step,
// selection of the level sets Omega_j, laminate refinement and gluing.

#include "stair/split.hpp"

#include <map>
#include <optional>

namespace stair {

struct RunConfig {
  int depth = 4;
  /// eps_j overrides keyed by j; missing keys use 10^-j.
  std::map<int, Rational> eps_override;
  Rational eta{1, 100};
  Rational coverage_relax{19, 20};
  /// Gap between tiling squares, as a fraction of the side.
  Rational gap_fraction{1, 100};
  /// Coverage of the disk by the base-step squares; unset means coverage_relax.
  std::optional<Rational> base_coverage;
  std::size_t cell_budget = 2'000'000;
  int polygon_sides = 1024;
  int boundary_layers = 0;
  /// Clamp eps per split when the two eps-balls would overlap.
  bool clamp_eps = true;
  /// Grid resolution for sampled C^1 distances.
  int c1_grid = 128;
  unsigned threads = 0;

  Rational eps(int j) const;
  bool eps_overridden(int j) const { return eps_override.count(j) > 0; }
  /// Throws std::invalid_argument.
  void check() const;
};

struct MetricsRow {
  int j = 0;
  double area_omega = 0.0;
  Rational yj;
  double mass22 = 0.0;
  double rho_min = 0.0;
  double det_min = 0.0, det_max = 0.0;
  double c1_delta = 0.0;
  double coverage = 0.0;
  double residual_area = 0.0;
  std::size_t cell_count = 0;
  double tv_proxy = 0.0;
  double area_e = 0.0;
  /// Area of the base-step squares.
  double base_area = 0.0;
  Rational eps;
  /// Radius the splits actually used at this depth (after clamping).
  double eps_used = 0.0;
};

struct IterationState {
  int j = 0;
  PWQ u;
  std::vector<Polygon> omega;
  /// Ids (into u) of the cells making up omega.
  std::vector<std::size_t> omega_cells;
  /// Ids of the E_j cells.
  std::vector<std::size_t> E;
  std::vector<MetricsRow> metrics;
  /// Area of the squares the base step refined.
  double tiled_area = 0.0;
};

class EngineError : public std::runtime_error {
 public:
  enum class Kind { EmptyLevelSet, BudgetExhausted, PropertyViolation };
  EngineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class RunStatus { Complete, BudgetExhausted, EmptyLevelSet };
std::string to_string(RunStatus s);

struct Trajectory {
  /// u_0, u_1, ... as built.
  std::vector<IterationState> states;
  RunStatus status = RunStatus::Complete;
  std::string message;
};

struct OmegaSelection {
  std::vector<Polygon> regions;
  /// Cells of u that must be replaced (E cells tiled by squares).
  std::vector<Replacement> replacements;
  /// Per replacement: its leading children are this many Omega squares.
  std::vector<std::size_t> square_counts;
  double coverage = 0.0;
};

/// E cells with pairwise disjoint closures and diameter <= 2/j are taken
/// whole; any other E cell is tiled with squares of side <= sqrt(2)/j.
OmegaSelection select_omega(const PWQ& u, const std::vector<std::size_t>& E, int j, const Rational& eps_j,
                            const RunConfig& cfg);

IterationState base_step(const RunConfig& cfg);
IterationState step(const IterationState& state, const RunConfig& cfg);
Trajectory run(const RunConfig& cfg);

/// Per-depth cell statistics (everything except c1_delta and coverage).
MetricsRow measure(const IterationState& state);

}  // namespace stair
