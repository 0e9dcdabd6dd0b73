#include "splinemart/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "splinemart/error.hpp"
#include "splinemart/quadrature.hpp"

namespace splinemart {

// ---------------------------------------------------------------------------
// SplineSpace

SplineSpace::SplineSpace(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  if (order < 1 || order > kMaxOrder) throw Error("spline order out of range");
  const auto k = static_cast<std::size_t>(order);
  if (knots_.size() < k + 1) throw Error("knot vector too short for one B-spline");
  if (!std::is_sorted(knots_.begin(), knots_.end())) throw Error("knots must be non-decreasing");
  for (std::size_t i = 0; i < knots_.size();) {
    std::size_t j = i;
    while (j < knots_.size() && knots_[j] == knots_[i]) ++j;
    if (j - i > k) {
      throw MultiplicityError("knot " + std::to_string(knots_[i]) + " repeated more than k times");
    }
    breaks_.push_back(knots_[i]);
    if (j < knots_.size()) spans_.push_back({knots_[i], knots_[j], j - 1});
    i = j;
  }
  if (spans_.empty()) throw Error("knot vector has no span of positive length");
}

SplineSpace::SplineSpace(const Grid& grid) : SplineSpace(grid.knot_vector(), grid.order()) {}

std::size_t SplineSpace::eval_span(double t) const {
  const auto it = std::upper_bound(spans_.begin(), spans_.end(), t,
                                   [](double v, const KnotSpan& s) { return v < s.hi; });
  if (it == spans_.end()) return spans_.size() - 1;
  return static_cast<std::size_t>(it - spans_.begin());
}

bool SplineSpace::contains(const SplineSpace& coarser) const {
  if (coarser.order_ != order_) return false;
  return std::includes(knots_.begin(), knots_.end(), coarser.knots_.begin(), coarser.knots_.end());
}

// ---------------------------------------------------------------------------
// Evaluation

BasisValues eval_basis(const SplineSpace& space, double t) {
  if (t < space.domain_lo() || t > space.domain_hi()) return {};
  const std::size_t s = space.eval_span(t);
  return eval_basis_in_span(space, s, t - space.spans()[s].lo);
}

BasisValues eval_basis_in_span(const SplineSpace& space, std::size_t span, double offset) {
  BasisValues out;
  const auto knots = space.knots();
  const int k = space.order();
  const auto last = static_cast<std::ptrdiff_t>(knots.size()) - 1;
  const double lo = space.spans()[span].lo;
  // Differences to the span start are exact for nearby knots, so tiny spans
  // keep full relative precision. Knots beyond either end are only touched
  // for basis functions that are dropped below; any monotone extension works.
  auto gap = [&](std::ptrdiff_t i) {
    if (i < 0) return knots.front() - lo + static_cast<double>(i);
    if (i > last) return knots.back() - lo + static_cast<double>(i - last);
    return knots[static_cast<std::size_t>(i)] - lo;
  };

  const auto mu = static_cast<std::ptrdiff_t>(space.spans()[span].index);
  std::array<double, kMaxOrder> n{};
  std::array<double, kMaxOrder> left{};
  std::array<double, kMaxOrder> right{};
  n[0] = 1.0;
  for (int j = 1; j < k; ++j) {
    left[j] = offset - gap(mu + 1 - j);
    right[j] = gap(mu + j) - offset;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }

  const std::ptrdiff_t first = mu - k + 1;
  const auto dim = static_cast<std::ptrdiff_t>(space.dimension());
  const std::ptrdiff_t lo_i = std::max<std::ptrdiff_t>(first, 0);
  const std::ptrdiff_t hi_i = std::min<std::ptrdiff_t>(mu, dim - 1);
  out.first = static_cast<std::size_t>(lo_i);
  for (std::ptrdiff_t i = lo_i; i <= hi_i; ++i) {
    out.values[out.count++] = n[static_cast<std::size_t>(i - first)];
  }
  return out;
}

double basis_value(const SplineSpace& space, std::size_t i, double t) {
  const auto knots = space.knots();
  const auto k = static_cast<std::size_t>(space.order());
  const double end = space.domain_hi();

  // Order-one indicators for N_{i}, ..., N_{i+k-1}.
  std::array<double, kMaxOrder> n{};
  for (std::size_t j = 0; j < k; ++j) {
    const double a = knots[i + j];
    const double b = knots[i + j + 1];
    const bool inside = a < b && ((a <= t && t < b) || (t == b && b == end));
    n[j] = inside ? 1.0 : 0.0;
  }
  // N_{j,r} = (t - a)/|supp N_{j,r-1}| N_{j,r-1} + (b - t)/|supp N_{j+1,r-1}| N_{j+1,r-1}
  for (std::size_t r = 2; r <= k; ++r) {
    for (std::size_t j = 0; j + r <= k; ++j) {
      const double a = knots[i + j];
      const double b = knots[i + j + r];
      const double len_left = knots[i + j + r - 1] - a;
      const double len_right = b - knots[i + j + 1];
      double v = 0.0;
      if (len_left > 0.0) v += (t - a) / len_left * n[j];
      if (len_right > 0.0) v += (b - t) / len_right * n[j + 1];
      n[j] = v;
    }
  }
  return n[0];
}

double basis_integral(const SplineSpace& space, std::size_t i) {
  const auto k = static_cast<std::size_t>(space.order());
  const auto& rule = gauss_legendre((k + 1) / 2 + 1);
  double sum = 0.0;
  const double lo = space.support_lo(i);
  const double hi = space.support_hi(i);
  for (const auto& span : space.spans()) {
    if (span.hi <= lo || span.lo >= hi) continue;
    for_each_node(span.lo, span.hi, rule, 1, [&](double x, double w) {
      const auto b = eval_basis(space, x);
      if (i >= b.first && i < b.first + b.count) sum += w * b.values[i - b.first];
    });
  }
  return sum;
}

Eigen::VectorXd greville(const SplineSpace& space) {
  const auto k = static_cast<std::size_t>(space.order());
  const auto knots = space.knots();
  Eigen::VectorXd g(static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    if (k == 1) {
      g[static_cast<Eigen::Index>(i)] = 0.5 * (knots[i] + knots[i + 1]);
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 1; j < k; ++j) s += knots[i + j];
    g[static_cast<Eigen::Index>(i)] = s / static_cast<double>(k - 1);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Spline

Spline::Spline(SplineSpace space, Eigen::MatrixXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (static_cast<std::size_t>(coeffs_.rows()) != space_.dimension()) {
    throw Error("coefficient rows must equal the space dimension");
  }
  if (coeffs_.cols() < 1) throw Error("spline needs at least one output component");
}

void Spline::eval(double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto b = eval_basis(space_, t);
  for (std::size_t r = 0; r < b.count; ++r) {
    const auto row = static_cast<Eigen::Index>(b.first + r);
    for (Eigen::Index c = 0; c < coeffs_.cols(); ++c) {
      out[static_cast<std::size_t>(c)] += b.values[r] * coeffs_(row, c);
    }
  }
}

Eigen::VectorXd Spline::operator()(double t) const {
  Eigen::VectorXd v(coeffs_.cols());
  eval(t, {v.data(), static_cast<std::size_t>(v.size())});
  return v;
}

double Spline::eval_component(double t, std::size_t c) const {
  const auto b = eval_basis(space_, t);
  double s = 0.0;
  for (std::size_t r = 0; r < b.count; ++r) {
    s += b.values[r] * coeffs_(static_cast<Eigen::Index>(b.first + r), static_cast<Eigen::Index>(c));
  }
  return s;
}

Spline Spline::component(std::size_t c) const {
  return Spline(space_, coeffs_.col(static_cast<Eigen::Index>(c)));
}

Eigen::VectorXd eval_spline(const Spline& s, double t) { return s(t); }

// ---------------------------------------------------------------------------
// Knot insertion

Spline insert_knot(const Spline& s, double x) {
  const auto& space = s.space();
  const auto knots = space.knots();
  const int k = space.order();
  if (!(x > space.domain_lo() && x < space.domain_hi())) {
    throw Error("inserted knot must lie strictly inside the domain");
  }
  const auto mult = std::count(knots.begin(), knots.end(), x);
  if (mult + 1 > max_interior_multiplicity(k)) {
    throw MultiplicityError("inserting " + std::to_string(x) + " would give multiplicity " +
                            std::to_string(mult + 1));
  }
  const auto mu = static_cast<std::ptrdiff_t>(
                      std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  const auto dim = static_cast<std::ptrdiff_t>(space.dimension());
  if (mu < k - 1 || mu > dim - 1) {
    throw Error("knot insertion needs k-fold padding around the inserted point");
  }

  const auto& a = s.coefficients();
  Eigen::MatrixXd b(a.rows() + 1, a.cols());
  for (std::ptrdiff_t i = 0; i <= dim; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (i <= mu - k + 1) {
      b.row(row) = a.row(row);
    } else if (i <= mu) {
      const double si = knots[static_cast<std::size_t>(i)];
      const double w = (x - si) / (knots[static_cast<std::size_t>(i + k - 1)] - si);
      b.row(row) = w * a.row(row) + (1.0 - w) * a.row(row - 1);
    } else {
      b.row(row) = a.row(row - 1);
    }
  }

  std::vector<double> new_knots(knots.begin(), knots.end());
  new_knots.insert(new_knots.begin() + mu + 1, x);
  return Spline(SplineSpace(std::move(new_knots), k), std::move(b));
}

std::vector<double> knot_difference(const SplineSpace& coarser, const SplineSpace& finer) {
  if (coarser.order() != finer.order()) throw NestingError("spaces have different orders");
  if (!finer.contains(coarser)) throw NestingError("finer space does not contain the coarse knots");
  std::vector<double> diff;
  std::set_difference(finer.knot_vector().begin(), finer.knot_vector().end(),
                      coarser.knot_vector().begin(), coarser.knot_vector().end(),
                      std::back_inserter(diff));
  return diff;
}

Spline refine(const Spline& s, const SplineSpace& finer) {
  const auto extra = knot_difference(s.space(), finer);
  Spline out = s;
  for (double x : extra) out = insert_knot(out, x);
  return out;
}

Eigen::MatrixXd refinement_matrix(const SplineSpace& coarser, const SplineSpace& finer) {
  const auto n = static_cast<Eigen::Index>(coarser.dimension());
  return refine(Spline(coarser, Eigen::MatrixXd::Identity(n, n)), finer).coefficients();
}

}  // namespace splinemart
