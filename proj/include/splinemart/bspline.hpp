#pragma once

// B-spline spaces over arbitrary knot vectors, evaluation, integrals, and
// knot insertion.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "splinemart/knots.hpp"

namespace splinemart {

/// Span of B-splines of order k over a non-decreasing knot vector
/// s_0 <= ... <= s_M, each knot value repeated at most k times. The basis
/// N_0 .. N_{dim-1} uses dim = M + 1 - k. Spaces built from a Grid live on
/// [0,1] with k-fold end knots; local spaces may leave an end unpadded.
class SplineSpace {
 public:
  SplineSpace(std::vector<double> knots, int order);
  explicit SplineSpace(const Grid& grid);

  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] std::size_t dimension() const { return knots_.size() - static_cast<std::size_t>(order_); }
  [[nodiscard]] std::span<const double> knots() const { return knots_; }
  [[nodiscard]] const std::vector<double>& knot_vector() const { return knots_; }
  [[nodiscard]] double domain_lo() const { return knots_.front(); }
  [[nodiscard]] double domain_hi() const { return knots_.back(); }

  [[nodiscard]] double support_lo(std::size_t i) const { return knots_[i]; }
  [[nodiscard]] double support_hi(std::size_t i) const { return knots_[i + static_cast<std::size_t>(order_)]; }
  [[nodiscard]] double support_length(std::size_t i) const { return support_hi(i) - support_lo(i); }

  /// Positive-length knot spans in increasing order.
  [[nodiscard]] const std::vector<KnotSpan>& spans() const { return spans_; }
  /// Distinct knot values (the breakpoints of every spline in the space).
  [[nodiscard]] const std::vector<double>& breakpoints() const { return breaks_; }

  /// Index into spans() of the span used for right-continuous evaluation at t.
  [[nodiscard]] std::size_t eval_span(double t) const;

  [[nodiscard]] KnotSpan interval(double t) const { return grid_interval(knots(), t); }
  [[nodiscard]] std::size_t anchor(double t) const { return anchor_index(knots(), order_, t); }
  [[nodiscard]] double hull(std::size_t i, std::size_t j) const { return hull_length(knots(), order_, i, j); }

  /// True when this space contains `coarser` (same order, knot multiset inclusion).
  [[nodiscard]] bool contains(const SplineSpace& coarser) const;

  friend bool operator==(const SplineSpace& a, const SplineSpace& b) {
    return a.order_ == b.order_ && a.knots_ == b.knots_;
  }

 private:
  std::vector<double> knots_;
  int order_;
  std::vector<KnotSpan> spans_;
  std::vector<double> breaks_;
};

/// Values of the (at most k) basis functions that can be nonzero at a point.
struct BasisValues {
  std::size_t first = 0;
  std::size_t count = 0;
  std::array<double, kMaxOrder> values{};

  [[nodiscard]] std::span<const double> view() const { return {values.data(), count}; }
};

/// Nonzero basis values at t via the triangular Cox-de Boor scheme.
/// Right-continuous at interior knots; at the right end of the domain the
/// left limit is used so the basis sums to one on the closed interval.
[[nodiscard]] BasisValues eval_basis(const SplineSpace& space, double t);
/// Same values at t = spans()[span].lo + offset, with the offset taken as
/// exact; quadrature on very short spans uses this form.
[[nodiscard]] BasisValues eval_basis_in_span(const SplineSpace& space, std::size_t span,
                                             double offset);

/// N_i(t) by raising the order from indicator functions one step at a time.
[[nodiscard]] double basis_value(const SplineSpace& space, std::size_t i, double t);

/// Integral of N_i over its support by per-span Gauss-Legendre quadrature.
[[nodiscard]] double basis_integral(const SplineSpace& space, std::size_t i);

/// Greville abscissae (average of the k-1 interior knots of each B-spline).
[[nodiscard]] Eigen::VectorXd greville(const SplineSpace& space);

/// R^d-valued spline: coefficient row i multiplies N_i.
class Spline {
 public:
  Spline(SplineSpace space, Eigen::MatrixXd coeffs);

  [[nodiscard]] const SplineSpace& space() const { return space_; }
  [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coeffs_; }
  [[nodiscard]] std::size_t output_dim() const { return static_cast<std::size_t>(coeffs_.cols()); }

  [[nodiscard]] Eigen::VectorXd operator()(double t) const;
  void eval(double t, std::span<double> out) const;
  [[nodiscard]] double eval_component(double t, std::size_t c) const;

  [[nodiscard]] Spline component(std::size_t c) const;

 private:
  SplineSpace space_;
  Eigen::MatrixXd coeffs_;
};

[[nodiscard]] Eigen::VectorXd eval_spline(const Spline& s, double t);

/// Boehm insertion of one knot; the function is unchanged and every new
/// coefficient is a convex combination of two neighbouring old ones.
[[nodiscard]] Spline insert_knot(const Spline& s, double x);

/// Knot multiset of `finer` minus that of `coarser`; throws NestingError if
/// the spaces are not nested.
[[nodiscard]] std::vector<double> knot_difference(const SplineSpace& coarser,
                                                  const SplineSpace& finer);

/// Representation of s in the finer space by repeated insertion.
[[nodiscard]] Spline refine(const Spline& s, const SplineSpace& finer);

/// Column i holds the coefficients of the coarse N_i in the fine basis.
[[nodiscard]] Eigen::MatrixXd refinement_matrix(const SplineSpace& coarser,
                                                const SplineSpace& finer);

}  // namespace splinemart
