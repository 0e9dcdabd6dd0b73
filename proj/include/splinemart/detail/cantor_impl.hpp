#pragma once

#include <algorithm>

namespace splinemart::cantor {

namespace detail {

template <class Visit>
void visit_cell(double lo, double len, double mass, int depth, std::span<const double> breaks,
                const QuadratureRule& r, int min_depth, Visit& visit) {
  const double hi = lo + len;
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), lo);
  const bool split = it != breaks.end() && *it < hi;
  if (!split && depth >= min_depth) {
    for (std::size_t q = 0; q < r.size(); ++q) visit(lo + len * r.nodes[q], mass * r.weights[q]);
    return;
  }
  if (depth >= kMaxDepth) {
    // Cell narrower than the double grid; its two end points carry the mass.
    visit(lo, 0.5 * mass);
    visit(hi, 0.5 * mass);
    return;
  }
  const double third = len / 3.0;
  visit_cell(lo, third, 0.5 * mass, depth + 1, breaks, r, min_depth, visit);
  visit_cell(hi - third, third, 0.5 * mass, depth + 1, breaks, r, min_depth, visit);
}

}  // namespace detail

template <class Visit>
void for_each_node(std::span<const double> breaks, std::size_t degree, int min_depth,
                   Visit&& visit) {
  const auto& r = rule(degree);
  detail::visit_cell(0.0, 1.0, 1.0, 0, breaks, r, min_depth, visit);
}

}  // namespace splinemart::cantor
