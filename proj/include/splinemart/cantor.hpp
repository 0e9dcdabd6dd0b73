#pragma once

// The middle-thirds Cantor measure mu on [0,1] (total mass 1) and exact
// integration of piecewise polynomials against it.

#include <cstddef>
#include <span>

#include "splinemart/quadrature.hpp"

namespace splinemart::cantor {

/// Cantor function C(t) = mu([0, t]).
[[nodiscard]] double cdf(double t);

/// mu([a, b]); mu has no atoms, so open and closed intervals agree.
[[nodiscard]] double measure(double a, double b);

/// Distance from t to the Cantor set.
[[nodiscard]] double distance_to_support(double t);

/// Interpolatory rule on [0,1] with degree + 1 Chebyshev nodes whose weights
/// integrate every polynomial of that degree exactly against mu.
[[nodiscard]] const QuadratureRule& rule(std::size_t degree);

inline constexpr std::size_t kMaxDegree = 32;
inline constexpr int kMaxDepth = 34;  // 3^-34 is below double resolution on [0,1]

/// Calls visit(x, w) for a node set that integrates against mu every function
/// that is a polynomial of the given degree between consecutive `breaks`
/// (sorted). Cells of the self-similar construction are split until they
/// hold no break in their interior and are at least `min_depth` deep.
template <class Visit>
void for_each_node(std::span<const double> breaks, std::size_t degree, int min_depth,
                   Visit&& visit);

}  // namespace splinemart::cantor

#include "splinemart/detail/cantor_impl.hpp"
