#pragma once

// C^1 piecewise-quadratic functions on convex-polygon decompositions.

#include "stair/geometry.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stair {

/// q(x) = 1/2 A x.x + b.x + c
struct Quadratic {
  SymMat A;
  Vec2 b;
  double c = 0.0;

  double value(Vec2 p) const { return 0.5 * dot(A.apply(p), p) + dot(b, p) + c; }
  Vec2 gradient(Vec2 p) const { return A.apply(p) + b; }

  /// 1/2 H (x - p0).(x - p0) + g.(x - p0) + v, expanded about the origin.
  static Quadratic centered(const SymMat& h, Vec2 p0, Vec2 g, double v);
  friend Quadratic operator+(const Quadratic& p, const Quadratic& q);
};

enum class TagKind : std::uint8_t { Atom, Perturbed, Residual, Untouched };
/// A_n, B_n, C_n of the schedule; D is the intermediate (x_{n+1}, y_n).
enum class Which : std::uint8_t { A, B, C, D };

struct CellTag {
  TagKind kind = TagKind::Untouched;
  int n = 0;
  Which which = Which::A;
  /// Max-entry distance of the Hessian to its target (Perturbed only).
  double bound = 0.0;

  static CellTag atom(int n, Which w) { return {TagKind::Atom, n, w, 0.0}; }
  static CellTag perturbed(int n, Which w, double bound) { return {TagKind::Perturbed, n, w, bound}; }
  static CellTag residual(int n) { return {TagKind::Residual, n, Which::A, 0.0}; }
  static CellTag untouched() { return {}; }
};

std::string to_string(const CellTag& t);
std::optional<CellTag> parse_tag(const std::string& s);
/// Exact matrix a tag refers to, e.g. A_n for atom(n, A).
DiagMat tag_target(int n, Which w);

struct Cell {
  Polygon region;
  Quadratic quad;
  CellTag tag;
  int depth = 0;
  std::uint64_t id = 0;
};

class PwqError : public std::runtime_error {
 public:
  enum class Kind { OutOfDomain, DomainMismatch, NotConvex, BoundaryMismatch, TilingGap, Invalid };
  PwqError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr double kGlueTol = 1e-9;
inline constexpr double kGeomRelTol = 1e-9;

struct ValidationReport {
  bool ok = true;
  double area_deficit = 0.0;
  double worst_edge_mismatch = 0.0;
  double overlap_area = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  std::size_t cell_count = 0;
  std::vector<std::string> failures;
};

class PWQ {
 public:
  PWQ() = default;
  PWQ(Polygon domain, std::vector<Cell> cells);

  /// Single cell covering `domain`.
  static PWQ single(Polygon domain, const Quadratic& q, CellTag tag = CellTag::untouched());

  const Polygon& domain() const { return data_->domain; }
  double domain_area() const { return data_->domain_area; }
  const std::vector<Cell>& cells() const { return data_->cells; }
  std::size_t size() const { return data_->cells.size(); }

  /// Index of the cell whose closure holds p; ties go to the lowest id.
  std::size_t locate(Vec2 p) const;
  /// Cells whose bounding box meets `box`.
  std::vector<std::size_t> candidates(const Box& box) const;

  /// Inclusive containment in the domain; `tol` is a distance.
  bool in_domain(Vec2 p, double tol = 1e-12) const;

  double evaluate(Vec2 p) const;
  Vec2 gradient(Vec2 p) const;
  SymMat hessian_at(Vec2 p) const;

 private:
  struct Index {
    Box box{};
    int nx = 1, ny = 1;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> items;
  };
  struct Data {
    Polygon domain;
    double domain_area = 0.0;
    /// Disk inside the domain, for a fast containment test.
    Vec2 center;
    double inner_radius = 0.0;
    std::vector<Cell> cells;
    std::vector<Box> boxes;
    Index index;
  };
  std::shared_ptr<const Data> data_;
};

using CellPredicate = std::function<bool(const Cell&)>;

double area_where(const PWQ& f, const CellPredicate& pred);
/// Deterministic sample set: a res x res grid over the domain plus every cell vertex.
std::vector<Vec2> default_samples(const PWQ& f, const PWQ& g, int res = 256);
double c1_distance(const PWQ& f, const PWQ& g, const std::vector<Vec2>& samples);
double monge_ampere_mass(const PWQ& f, std::span<const Vec2> region);

using Replacement = std::pair<std::uint64_t, std::vector<Cell>>;
/// Replace cells by children; child ids are reassigned in parent order.
PWQ glue(const PWQ& f, const std::vector<Replacement>& replacements);

/// Max value/gradient mismatch between `children` and `parent` on the parent boundary.
double boundary_mismatch(const Cell& parent, const std::vector<Cell>& children);

ValidationReport validate(const PWQ& f);

}  // namespace stair
