#pragma once

// Knot programs, augmented grids on [0,1], mesh geometry, and the
// decomposition of [0,1] induced by the accumulation points of a knot
// sequence.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace splinemart {

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Largest supported spline order.
inline constexpr int kMaxOrder = 12;

/// Side(s) from which a knot sequence approaches a point.
enum class Approach { left, right, both };

struct AccumulationPoint {
  double x = 0.0;
  bool from_left = false;
  bool from_right = false;
};

struct ClosedInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Finite point set plus closed sub-intervals of [0,1], with the side
/// information needed to decide which boundary points are reachable from
/// inside a neighbouring gap. Interval endpoints are approached from the
/// interval's interior.
class AccumulationSet {
 public:
  void add_point(double x, bool from_left, bool from_right);
  void add_interval(double lo, double hi);

  /// Merges overlapping intervals and absorbs points lying inside them.
  void normalize();

  [[nodiscard]] const std::vector<AccumulationPoint>& points() const { return points_; }
  [[nodiscard]] const std::vector<ClosedInterval>& intervals() const { return intervals_; }
  [[nodiscard]] bool empty() const { return points_.empty() && intervals_.empty(); }

  [[nodiscard]] bool contains(double x) const;
  [[nodiscard]] double distance(double x) const;
  [[nodiscard]] bool approached_from_left(double x) const;
  [[nodiscard]] bool approached_from_right(double x) const;
  [[nodiscard]] double lebesgue_measure() const;

 private:
  std::vector<AccumulationPoint> points_;
  std::vector<ClosedInterval> intervals_;
};

/// Generator of an infinite (or finite) sequence of interior knots t_1, t_2, ...
/// in (0,1), together with the analytically declared accumulation set of the
/// sequence.
class KnotProgram {
 public:
  enum class Family {
    explicit_list,
    uniform_dense,
    dyadic_dense,
    geometric_to_point,
    dense_in_subinterval,
    concatenation
  };

  static KnotProgram explicit_list(int order, std::vector<double> knots);
  /// b-adic enumeration: level by level, the new points j / b^m in increasing order.
  static KnotProgram uniform_dense(int order, unsigned base = 3);
  static KnotProgram dyadic_dense(int order);
  /// t_i = target -+ d0 * ratio^i, d0 the distance from target to the boundary
  /// on the approach side. `both` alternates left and right.
  static KnotProgram geometric_to_point(int order, double target, double ratio,
                                        Approach side);
  /// Dyadic enumeration mapped affinely onto (a, b).
  static KnotProgram dense_in_subinterval(int order, double a, double b);
  /// Round-robin interleaving of the parts; exhausted finite parts are skipped.
  static KnotProgram concatenation(int order, std::vector<KnotProgram> parts);

  [[nodiscard]] Family family() const;
  [[nodiscard]] int order() const { return order_; }

  /// Number of knots the program can emit (kUnbounded for infinite programs;
  /// geometric programs stop once the next point is no longer representable).
  [[nodiscard]] std::size_t capacity() const;

  /// First n knots in generation order. Throws if n exceeds capacity().
  [[nodiscard]] std::vector<double> generate(std::size_t n) const;

  [[nodiscard]] AccumulationSet declared_accumulation() const;

  [[nodiscard]] std::string family_name() const;

  /// The same program with a different spline order.
  [[nodiscard]] KnotProgram with_order(int order) const;

  struct ExplicitList {
    std::vector<double> knots;
  };
  struct Adic {
    unsigned base = 2;
    bool dyadic_alias = false;
  };
  struct Geometric {
    double target = 0.5;
    double ratio = 0.5;
    Approach side = Approach::left;
    std::size_t capacity = 0;
  };
  struct Subinterval {
    double a = 0.0;
    double b = 1.0;
  };
  struct Concatenation {
    std::vector<KnotProgram> parts;
  };
  using Params = std::variant<ExplicitList, Adic, Geometric, Subinterval, Concatenation>;

  [[nodiscard]] const Params& params() const { return params_; }

 private:
  KnotProgram(int order, Params params);

  int order_ = 1;
  Params params_;
};

/// Finite augmented knot vector on [0,1]: 0 and 1 each appear `order` times,
/// interior multiplicities are at most max(order - 1, 1).
class Grid {
 public:
  Grid(std::vector<double> knots, int order);

  static Grid from_interior(std::vector<double> interior, int order);
  static Grid uniform(int order, std::size_t cells);

  [[nodiscard]] std::span<const double> knots() const { return knots_; }
  [[nodiscard]] const std::vector<double>& knot_vector() const { return knots_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] std::size_t interior_count() const { return knots_.size() - 2 * static_cast<std::size_t>(order_); }
  [[nodiscard]] std::size_t dimension() const { return knots_.size() - static_cast<std::size_t>(order_); }

 private:
  std::vector<double> knots_;
  int order_;
};

/// Largest admissible multiplicity of an interior knot for the given order.
[[nodiscard]] int max_interior_multiplicity(int order);

/// Grid made of the first n knots of the program, augmented and sorted.
[[nodiscard]] Grid realize(const KnotProgram& program, std::size_t n);

[[nodiscard]] double mesh_width(std::span<const double> knots);
[[nodiscard]] double mesh_width(const Grid& grid);

/// Positive-length knot span [lo, hi]; `index` is the largest knot index with
/// knots[index] == lo.
struct KnotSpan {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t index = 0;
  [[nodiscard]] double length() const { return hi - lo; }
};

/// I(t): the positive-length span containing t. At a breakpoint shared by two
/// spans the left one is returned; t at or below the first knot gives the first span.
[[nodiscard]] KnotSpan grid_interval(std::span<const double> knots, double t);
[[nodiscard]] KnotSpan grid_interval(const Grid& grid, double t);

/// i(t): largest basis index i with I(t) contained in supp N_i.
[[nodiscard]] std::size_t anchor_index(std::span<const double> knots, int order, double t);
[[nodiscard]] std::size_t anchor_index(const Grid& grid, double t);

/// Length of the convex hull of supp N_i and supp N_j.
[[nodiscard]] double hull_length(std::span<const double> knots, int order, std::size_t i,
                                 std::size_t j);
[[nodiscard]] double hull_length(const Grid& grid, std::size_t i, std::size_t j);

/// One connected component U_j of [0,1] minus the accumulation set, with the
/// boundary bookkeeping that defines B_j and V_j.
struct Component {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_in_u = false;  ///< lo is a domain endpoint that is not an accumulation point
  bool hi_in_u = false;
  bool lo_in_b = false;  ///< lo in B_j: no knots inside U_j converge to it
  bool hi_in_b = false;

  [[nodiscard]] double length() const { return hi - lo; }
  [[nodiscard]] bool lo_in_v() const { return lo_in_u || lo_in_b; }
  [[nodiscard]] bool hi_in_v() const { return hi_in_u || hi_in_b; }
  [[nodiscard]] bool in_u(double t) const;
  [[nodiscard]] bool in_v(double t) const;
  [[nodiscard]] std::vector<double> b_points() const;
};

struct Decomposition {
  AccumulationSet accumulation;
  std::vector<Component> components;  ///< U_j, sorted by left endpoint

  /// Index of the component U_j containing t, if any.
  [[nodiscard]] std::optional<std::size_t> component_of(double t) const;
  [[nodiscard]] bool in_v(double t) const;
  /// lambda(V^c).
  [[nodiscard]] double complement_measure() const;
  /// Endpoints of the U_j that are accumulation points (a Lebesgue null set).
  [[nodiscard]] std::vector<double> boundary_points() const;
};

[[nodiscard]] Decomposition decompose(const KnotProgram& program);

/// Lattice points x (spacing eps/2) with at least ceil(sqrt(n)) of the first n
/// knots within eps/2 of x (hence within eps).
[[nodiscard]] std::vector<double> estimate_accumulation(const KnotProgram& program,
                                                        std::size_t n, double eps);

/// Hausdorff distance between a finite point set and an accumulation set;
/// intervals are sampled at the given resolution.
[[nodiscard]] double hausdorff_distance(std::span<const double> points,
                                        const AccumulationSet& set, double resolution);

}  // namespace splinemart
