#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "splinemart/bspline.hpp"
#include "splinemart/knots.hpp"
#include "splinemart/quadrature.hpp"

namespace testutil {

using splinemart::Grid;
using splinemart::SplineSpace;

/// Sorted interior knots in (0,1); some values repeated up to max(k-1, 1) times.
inline std::vector<double> random_interior(std::mt19937_64& rng, int k, std::size_t n,
                                           bool repeats = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  const int cap = std::max(k - 1, 1);
  while (x.size() < n) {
    const double t = u(rng);
    if (t <= 0.0 || t >= 1.0) continue;
    int m = 1;
    if (repeats && cap > 1 && u(rng) < 0.15) m = 1 + static_cast<int>(u(rng) * cap) % cap;
    for (int i = 0; i < m && x.size() < n; ++i) x.push_back(t);
  }
  std::sort(x.begin(), x.end());
  return x;
}

inline SplineSpace random_space(std::mt19937_64& rng, int k, std::size_t n, bool repeats = true) {
  return SplineSpace(Grid::from_interior(random_interior(rng, k, n, repeats), k));
}

/// Composite Gauss-Legendre over every span with many nodes: an oracle that
/// is independent of the per-span exact rules used by the library.
template <class F>
double span_integral(const SplineSpace& space, F&& f, std::size_t nodes = 24, std::size_t panels = 3) {
  double sum = 0.0;
  for (const auto& span : space.spans()) {
    sum += splinemart::integrate(f, span.lo, span.hi, nodes, panels);
  }
  return sum;
}

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace testutil
