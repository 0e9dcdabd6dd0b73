#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace splinemart {

/// Gauss-Legendre rule mapped to [0,1]; n nodes integrate polynomials of
/// degree <= 2n - 1 exactly.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

inline constexpr std::size_t kMaxGaussNodes = 64;

/// Cached rule with n nodes, 1 <= n <= kMaxGaussNodes.
[[nodiscard]] const QuadratureRule& gauss_legendre(std::size_t n);

/// Number of nodes that integrates polynomials of the given degree exactly.
[[nodiscard]] constexpr std::size_t nodes_for_degree(std::size_t degree) {
  return degree / 2 + 1;
}

/// Calls visit(x, w) for every node of `panels` equal sub-panels of [a, b].
template <class Visit>
void for_each_node(double a, double b, const QuadratureRule& rule, std::size_t panels,
                   Visit&& visit) {
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      visit(lo + h * rule.nodes[q], h * rule.weights[q]);
    }
  }
}

/// As for_each_node on [origin + a, origin + b], passing visit(x, offset, w)
/// with offset = x - origin computed without cancellation.
template <class Visit>
void for_each_offset(double origin, double a, double b, const QuadratureRule& rule,
                     std::size_t panels, Visit&& visit) {
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double off = lo + h * rule.nodes[q];
      visit(origin + off, off, h * rule.weights[q]);
    }
  }
}

/// Composite Gauss-Legendre integral of a scalar function over [a, b].
template <class F>
double integrate(F&& f, double a, double b, std::size_t nodes, std::size_t panels = 1) {
  double sum = 0.0;
  for_each_node(a, b, gauss_legendre(nodes), panels, [&](double x, double w) { sum += w * f(x); });
  return sum;
}

/// Sub-intervals of [a, b] obtained by cutting at the breakpoints strictly
/// inside (a, b). `breaks` must be sorted.
[[nodiscard]] std::vector<std::pair<double, double>> split_interval(double a, double b,
                                                                    std::span<const double> breaks);

}  // namespace splinemart
