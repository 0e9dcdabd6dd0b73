#include "splinemart/knots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "splinemart/error.hpp"

namespace splinemart {

namespace {

void check_order(int order) {
  if (order < 1 || order > kMaxOrder) {
    throw Error("spline order must lie in [1, " + std::to_string(kMaxOrder) + "], got " +
                std::to_string(order));
  }
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
  return (a > kUnbounded - b) ? kUnbounded : a + b;
}

std::size_t geometric_capacity(const KnotProgram::Geometric& g) {
  // Count terms until the next point is not strictly closer to the target.
  const double left_d0 = g.target;
  const double right_d0 = 1.0 - g.target;
  double left_dist = left_d0;
  double right_dist = right_d0;
  double left_prev = 0.0;
  double right_prev = 1.0;
  std::size_t count = 0;
  const bool use_left = g.side != Approach::right;
  const bool use_right = g.side != Approach::left;
  for (;;) {
    if (use_left) {
      left_dist *= g.ratio;
      const double x = g.target - left_dist;
      if (!(x > left_prev && x < g.target && x > 0.0)) break;
      left_prev = x;
      ++count;
    }
    if (use_right) {
      right_dist *= g.ratio;
      const double x = g.target + right_dist;
      if (!(x < right_prev && x > g.target && x < 1.0)) break;
      right_prev = x;
      ++count;
    }
  }
  return count;
}

std::vector<double> generate_adic(unsigned base, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  double denom = 1.0;
  std::uint64_t den_int = 1;
  while (out.size() < n) {
    denom *= base;
    den_int *= base;
    for (std::uint64_t j = 1; j < den_int && out.size() < n; ++j) {
      if (j % base == 0) continue;
      out.push_back(static_cast<double>(j) / denom);
    }
    if (den_int > (std::uint64_t{1} << 52)) {
      throw Error("b-adic enumeration exhausted double precision");
    }
  }
  return out;
}

std::vector<double> generate_geometric(const KnotProgram::Geometric& g, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  double left_dist = g.target;
  double right_dist = 1.0 - g.target;
  const bool use_left = g.side != Approach::right;
  const bool use_right = g.side != Approach::left;
  while (out.size() < n) {
    if (use_left) {
      left_dist *= g.ratio;
      out.push_back(g.target - left_dist);
      if (out.size() == n) break;
    }
    if (use_right) {
      right_dist *= g.ratio;
      out.push_back(g.target + right_dist);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// AccumulationSet

void AccumulationSet::add_point(double x, bool from_left, bool from_right) {
  points_.push_back({x, from_left, from_right});
}

void AccumulationSet::add_interval(double lo, double hi) {
  if (!(lo < hi)) throw Error("accumulation interval must have lo < hi");
  intervals_.push_back({lo, hi});
}

void AccumulationSet::normalize() {
  std::sort(intervals_.begin(), intervals_.end(),
            [](const ClosedInterval& a, const ClosedInterval& b) { return a.lo < b.lo; });
  std::vector<ClosedInterval> merged;
  for (const auto& iv : intervals_) {
    if (!merged.empty() && iv.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    } else {
      merged.push_back(iv);
    }
  }
  intervals_ = std::move(merged);

  std::sort(points_.begin(), points_.end(),
            [](const AccumulationPoint& a, const AccumulationPoint& b) { return a.x < b.x; });
  std::vector<AccumulationPoint> kept;
  for (const auto& p : points_) {
    const bool inside = std::any_of(intervals_.begin(), intervals_.end(),
                                    [&](const ClosedInterval& iv) { return iv.lo < p.x && p.x < iv.hi; });
    if (inside) continue;
    if (!kept.empty() && kept.back().x == p.x) {
      kept.back().from_left = kept.back().from_left || p.from_left;
      kept.back().from_right = kept.back().from_right || p.from_right;
    } else {
      kept.push_back(p);
    }
  }
  points_ = std::move(kept);
}

bool AccumulationSet::contains(double x) const {
  for (const auto& p : points_) {
    if (p.x == x) return true;
  }
  for (const auto& iv : intervals_) {
    if (iv.lo <= x && x <= iv.hi) return true;
  }
  return false;
}

double AccumulationSet::distance(double x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) d = std::min(d, std::abs(p.x - x));
  for (const auto& iv : intervals_) {
    if (x < iv.lo) {
      d = std::min(d, iv.lo - x);
    } else if (x > iv.hi) {
      d = std::min(d, x - iv.hi);
    } else {
      return 0.0;
    }
  }
  return d;
}

bool AccumulationSet::approached_from_left(double x) const {
  for (const auto& p : points_) {
    if (p.x == x && p.from_left) return true;
  }
  for (const auto& iv : intervals_) {
    if (iv.lo < x && x <= iv.hi) return true;
  }
  return false;
}

bool AccumulationSet::approached_from_right(double x) const {
  for (const auto& p : points_) {
    if (p.x == x && p.from_right) return true;
  }
  for (const auto& iv : intervals_) {
    if (iv.lo <= x && x < iv.hi) return true;
  }
  return false;
}

double AccumulationSet::lebesgue_measure() const {
  double m = 0.0;
  for (const auto& iv : intervals_) m += iv.hi - iv.lo;
  return m;
}

// ---------------------------------------------------------------------------
// KnotProgram

KnotProgram::KnotProgram(int order, Params params) : order_(order), params_(std::move(params)) {
  check_order(order);
}

KnotProgram KnotProgram::explicit_list(int order, std::vector<double> knots) {
  for (double t : knots) {
    if (!(t > 0.0 && t < 1.0)) {
      throw Error("explicit knot " + std::to_string(t) + " is not in the open interval (0,1)");
    }
  }
  return KnotProgram(order, ExplicitList{std::move(knots)});
}

KnotProgram KnotProgram::uniform_dense(int order, unsigned base) {
  if (base < 2) throw Error("uniform-dense base must be at least 2");
  return KnotProgram(order, Adic{base, false});
}

KnotProgram KnotProgram::dyadic_dense(int order) { return KnotProgram(order, Adic{2, true}); }

KnotProgram KnotProgram::geometric_to_point(int order, double target, double ratio,
                                            Approach side) {
  if (!(target >= 0.0 && target <= 1.0)) throw Error("geometric target must lie in [0,1]");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("geometric ratio must lie in (0,1)");
  if (side != Approach::right && target == 0.0) {
    throw Error("geometric program cannot approach 0 from the left");
  }
  if (side != Approach::left && target == 1.0) {
    throw Error("geometric program cannot approach 1 from the right");
  }
  Geometric g{target, ratio, side, 0};
  g.capacity = geometric_capacity(g);
  return KnotProgram(order, g);
}

KnotProgram KnotProgram::dense_in_subinterval(int order, double a, double b) {
  if (!(0.0 <= a && a < b && b <= 1.0)) throw Error("dense-in-subinterval needs 0 <= a < b <= 1");
  return KnotProgram(order, Subinterval{a, b});
}

KnotProgram KnotProgram::concatenation(int order, std::vector<KnotProgram> parts) {
  if (parts.empty()) throw Error("concatenation needs at least one part");
  for (auto& p : parts) p = p.with_order(order);
  return KnotProgram(order, Concatenation{std::move(parts)});
}

KnotProgram KnotProgram::with_order(int order) const {
  KnotProgram copy = *this;
  check_order(order);
  copy.order_ = order;
  if (auto* c = std::get_if<Concatenation>(&copy.params_)) {
    for (auto& p : c->parts) p = p.with_order(order);
  }
  return copy;
}

KnotProgram::Family KnotProgram::family() const {
  return std::visit(
      [](const auto& p) -> Family {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExplicitList>) {
          return Family::explicit_list;
        } else if constexpr (std::is_same_v<T, Adic>) {
          return p.dyadic_alias ? Family::dyadic_dense : Family::uniform_dense;
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return Family::geometric_to_point;
        } else if constexpr (std::is_same_v<T, Subinterval>) {
          return Family::dense_in_subinterval;
        } else {
          return Family::concatenation;
        }
      },
      params_);
}

std::string KnotProgram::family_name() const {
  switch (family()) {
    case Family::explicit_list: return "explicit-list";
    case Family::uniform_dense: return "uniform-dense";
    case Family::dyadic_dense: return "dyadic-dense";
    case Family::geometric_to_point: return "geometric-to-point";
    case Family::dense_in_subinterval: return "dense-in-subinterval";
    case Family::concatenation: return "concatenation";
  }
  return "unknown";
}

std::size_t KnotProgram::capacity() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExplicitList>) {
          return p.knots.size();
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return p.capacity;
        } else if constexpr (std::is_same_v<T, Concatenation>) {
          std::size_t total = 0;
          for (const auto& part : p.parts) total = saturating_add(total, part.capacity());
          return total;
        } else {
          return kUnbounded;
        }
      },
      params_);
}

std::vector<double> KnotProgram::generate(std::size_t n) const {
  if (n > capacity()) {
    throw Error(family_name() + " program can emit only " + std::to_string(capacity()) +
                " knots, requested " + std::to_string(n));
  }
  return std::visit(
      [n](const auto& p) -> std::vector<double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExplicitList>) {
          return {p.knots.begin(), p.knots.begin() + static_cast<std::ptrdiff_t>(n)};
        } else if constexpr (std::is_same_v<T, Adic>) {
          return generate_adic(p.base, n);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return generate_geometric(p, n);
        } else if constexpr (std::is_same_v<T, Subinterval>) {
          auto unit = generate_adic(2, n);
          for (double& x : unit) x = p.a + (p.b - p.a) * x;
          return unit;
        } else {
          std::vector<std::vector<double>> streams;
          for (const auto& part : p.parts) {
            streams.push_back(part.generate(std::min(n, part.capacity())));
          }
          std::vector<double> out;
          out.reserve(n);
          for (std::size_t idx = 0; out.size() < n; ++idx) {
            for (const auto& s : streams) {
              if (idx < s.size() && out.size() < n) out.push_back(s[idx]);
            }
          }
          return out;
        }
      },
      params_);
}

AccumulationSet KnotProgram::declared_accumulation() const {
  AccumulationSet acc;
  std::visit(
      [&acc](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Adic>) {
          acc.add_interval(0.0, 1.0);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          acc.add_point(p.target, p.side != Approach::right, p.side != Approach::left);
        } else if constexpr (std::is_same_v<T, Subinterval>) {
          acc.add_interval(p.a, p.b);
        } else if constexpr (std::is_same_v<T, Concatenation>) {
          for (const auto& part : p.parts) {
            const auto sub = part.declared_accumulation();
            for (const auto& pt : sub.points()) acc.add_point(pt.x, pt.from_left, pt.from_right);
            for (const auto& iv : sub.intervals()) acc.add_interval(iv.lo, iv.hi);
          }
        }
      },
      params_);
  acc.normalize();
  return acc;
}

// ---------------------------------------------------------------------------
// Grid

int max_interior_multiplicity(int order) { return std::max(order - 1, 1); }

Grid::Grid(std::vector<double> knots, int order) : knots_(std::move(knots)), order_(order) {
  check_order(order);
  const auto k = static_cast<std::size_t>(order);
  if (knots_.size() < 2 * k) throw Error("grid needs at least 2k knots");
  if (!std::is_sorted(knots_.begin(), knots_.end())) throw Error("grid knots must be non-decreasing");
  for (std::size_t i = 0; i < k; ++i) {
    if (knots_[i] != 0.0 || knots_[knots_.size() - 1 - i] != 1.0) {
      throw Error("grid must contain 0 and 1 exactly k times at its ends");
    }
  }
  if (knots_.size() > 2 * k && (knots_[k] <= 0.0 || knots_[knots_.size() - 1 - k] >= 1.0)) {
    throw Error("interior knots must lie in (0,1)");
  }
  const int cap = max_interior_multiplicity(order);
  std::size_t i = k;
  while (i < knots_.size() - k) {
    std::size_t j = i;
    while (j < knots_.size() - k && knots_[j] == knots_[i]) ++j;
    if (static_cast<int>(j - i) > cap) {
      throw MultiplicityError("interior knot " + std::to_string(knots_[i]) + " has multiplicity " +
                              std::to_string(j - i) + " > " + std::to_string(cap));
    }
    i = j;
  }
}

Grid Grid::from_interior(std::vector<double> interior, int order) {
  check_order(order);
  std::sort(interior.begin(), interior.end());
  std::vector<double> knots(static_cast<std::size_t>(order), 0.0);
  knots.insert(knots.end(), interior.begin(), interior.end());
  knots.insert(knots.end(), static_cast<std::size_t>(order), 1.0);
  return Grid(std::move(knots), order);
}

Grid Grid::uniform(int order, std::size_t cells) {
  if (cells == 0) throw Error("uniform grid needs at least one cell");
  std::vector<double> interior;
  for (std::size_t i = 1; i < cells; ++i) {
    interior.push_back(static_cast<double>(i) / static_cast<double>(cells));
  }
  return from_interior(std::move(interior), order);
}

Grid realize(const KnotProgram& program, std::size_t n) {
  auto interior = program.generate(n);
  for (double t : interior) {
    if (!(t > 0.0 && t < 1.0)) throw Error("generated knot outside (0,1)");
  }
  return Grid::from_interior(std::move(interior), program.order());
}

// ---------------------------------------------------------------------------
// Mesh geometry

double mesh_width(std::span<const double> knots) {
  double w = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) w = std::max(w, knots[i] - knots[i - 1]);
  return w;
}

double mesh_width(const Grid& grid) { return mesh_width(grid.knots()); }

KnotSpan grid_interval(std::span<const double> knots, double t) {
  const double first = knots.front();
  const double last = knots.back();
  if (!(first < last)) throw Error("knot vector has no span of positive length");

  if (t <= first) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), first);
    const auto idx = static_cast<std::size_t>(it - knots.begin()) - 1;
    return {first, *it, idx};
  }
  if (t >= last) {
    const auto it = std::lower_bound(knots.begin(), knots.end(), last);
    const auto idx = static_cast<std::size_t>(it - knots.begin()) - 1;
    return {knots[idx], last, idx};
  }
  // First knot >= t; the span to its left contains t and ends at or after t.
  const auto it = std::lower_bound(knots.begin(), knots.end(), t);
  const auto idx = static_cast<std::size_t>(it - knots.begin()) - 1;
  return {knots[idx], *it, idx};
}

KnotSpan grid_interval(const Grid& grid, double t) { return grid_interval(grid.knots(), t); }

std::size_t anchor_index(std::span<const double> knots, int order, double t) {
  const auto span = grid_interval(knots, t);
  const std::size_t dim = knots.size() - static_cast<std::size_t>(order);
  return std::min(span.index, dim - 1);
}

std::size_t anchor_index(const Grid& grid, double t) {
  return anchor_index(grid.knots(), grid.order(), t);
}

double hull_length(std::span<const double> knots, int order, std::size_t i, std::size_t j) {
  const auto k = static_cast<std::size_t>(order);
  return std::max(knots[i + k], knots[j + k]) - std::min(knots[i], knots[j]);
}

double hull_length(const Grid& grid, std::size_t i, std::size_t j) {
  return hull_length(grid.knots(), grid.order(), i, j);
}

// ---------------------------------------------------------------------------
// Decomposition

bool Component::in_u(double t) const {
  if (t > lo && t < hi) return true;
  return (t == lo && lo_in_u) || (t == hi && hi_in_u);
}

bool Component::in_v(double t) const {
  if (t > lo && t < hi) return true;
  return (t == lo && lo_in_v()) || (t == hi && hi_in_v());
}

std::vector<double> Component::b_points() const {
  std::vector<double> out;
  if (lo_in_b) out.push_back(lo);
  if (hi_in_b) out.push_back(hi);
  return out;
}

std::optional<std::size_t> Decomposition::component_of(double t) const {
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (components[j].in_u(t)) return j;
  }
  return std::nullopt;
}

bool Decomposition::in_v(double t) const {
  return std::any_of(components.begin(), components.end(),
                     [t](const Component& c) { return c.in_v(t); });
}

double Decomposition::complement_measure() const {
  double covered = 0.0;
  for (const auto& c : components) covered += c.length();
  return std::max(0.0, 1.0 - covered);
}

std::vector<double> Decomposition::boundary_points() const {
  std::vector<double> out;
  for (const auto& c : components) {
    if (!c.lo_in_u) out.push_back(c.lo);
    if (!c.hi_in_u) out.push_back(c.hi);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Decomposition decompose(const KnotProgram& program) {
  Decomposition dec;
  dec.accumulation = program.declared_accumulation();
  const auto& acc = dec.accumulation;

  // Blocks of the accumulation set in increasing order.
  std::vector<ClosedInterval> blocks;
  for (const auto& p : acc.points()) blocks.push_back({p.x, p.x});
  for (const auto& iv : acc.intervals()) blocks.push_back(iv);
  std::sort(blocks.begin(), blocks.end(),
            [](const ClosedInterval& a, const ClosedInterval& b) { return a.lo < b.lo; });
  std::vector<ClosedInterval> merged;
  for (const auto& b : blocks) {
    if (!merged.empty() && b.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, b.hi);
    } else {
      merged.push_back(b);
    }
  }

  double cursor = 0.0;
  bool cursor_in_u = true;  // 0 belongs to U unless it is an accumulation point
  auto emit = [&](double lo, bool lo_in_u, double hi, bool hi_in_u) {
    if (!(lo < hi)) return;
    Component c;
    c.lo = lo;
    c.hi = hi;
    c.lo_in_u = lo_in_u;
    c.hi_in_u = hi_in_u;
    c.lo_in_b = !lo_in_u && !acc.approached_from_right(lo);
    c.hi_in_b = !hi_in_u && !acc.approached_from_left(hi);
    dec.components.push_back(c);
  };
  for (const auto& b : merged) {
    emit(cursor, cursor_in_u, b.lo, false);
    cursor = b.hi;
    cursor_in_u = false;
  }
  emit(cursor, cursor_in_u, 1.0, true);
  return dec;
}

std::vector<double> estimate_accumulation(const KnotProgram& program, std::size_t n, double eps) {
  if (n == 0 || !(eps > 0.0)) throw Error("estimate_accumulation needs n >= 1 and eps > 0");
  auto knots = program.generate(std::min(n, program.capacity()));
  std::sort(knots.begin(), knots.end());
  const auto threshold = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(knots.size())))));
  std::vector<double> hits;
  const double step = 0.5 * eps;
  const auto steps = static_cast<std::size_t>(std::ceil(1.0 / step));
  for (std::size_t m = 0; m <= steps; ++m) {
    const double x = std::min(1.0, static_cast<double>(m) * step);
    // Counting within eps/2 keeps hits within eps of the clusters they see.
    const auto lo = std::lower_bound(knots.begin(), knots.end(), x - step);
    const auto hi = std::upper_bound(knots.begin(), knots.end(), x + step);
    if (static_cast<std::size_t>(hi - lo) >= threshold) hits.push_back(x);
  }
  return hits;
}

double hausdorff_distance(std::span<const double> points, const AccumulationSet& set,
                          double resolution) {
  std::vector<double> samples;
  for (const auto& p : set.points()) samples.push_back(p.x);
  for (const auto& iv : set.intervals()) {
    const auto m = static_cast<std::size_t>(std::ceil((iv.hi - iv.lo) / resolution));
    for (std::size_t i = 0; i <= m; ++i) {
      samples.push_back(iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / static_cast<double>(m));
    }
  }
  if (points.empty() && samples.empty()) return 0.0;
  if (points.empty() || samples.empty()) return std::numeric_limits<double>::infinity();

  double d = 0.0;
  for (double p : points) d = std::max(d, set.distance(p));
  std::vector<double> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  for (double s : samples) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
    double best = std::numeric_limits<double>::infinity();
    if (it != sorted.end()) best = *it - s;
    if (it != sorted.begin()) best = std::min(best, s - *(it - 1));
    d = std::max(d, best);
  }
  return d;
}

}  // namespace splinemart
