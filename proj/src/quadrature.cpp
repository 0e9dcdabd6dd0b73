#include "splinemart/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "splinemart/error.hpp"

namespace splinemart {

namespace {

QuadratureRule build_rule(std::size_t n) {
  // Newton iteration on P_n, nodes symmetric about 0, then mapped to [0,1].
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const auto jd = static_cast<double>(j);
        const double p2 = ((2.0 * jd - 1.0) * x * p1 - (jd - 1.0) * p0) / jd;
        p0 = p1;
        p1 = p2;
      }
      dp = nd * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(std::size_t n) {
  static const auto table = [] {
    std::array<QuadratureRule, kMaxGaussNodes + 1> t{};
    for (std::size_t m = 1; m <= kMaxGaussNodes; ++m) t[m] = build_rule(m);
    return t;
  }();
  if (n == 0 || n > kMaxGaussNodes) {
    throw Error("Gauss-Legendre rule size must lie in [1, " + std::to_string(kMaxGaussNodes) + "]");
  }
  return table[n];
}

std::vector<std::pair<double, double>> split_interval(double a, double b,
                                                      std::span<const double> breaks) {
  std::vector<std::pair<double, double>> pieces;
  double lo = a;
  auto it = std::upper_bound(breaks.begin(), breaks.end(), a);
  for (; it != breaks.end() && *it < b; ++it) {
    if (*it > lo) {
      pieces.emplace_back(lo, *it);
      lo = *it;
    }
  }
  if (b > lo) pieces.emplace_back(lo, b);
  return pieces;
}

}  // namespace splinemart
