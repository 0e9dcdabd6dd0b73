#include "splinemart/cantor.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>

#include "splinemart/error.hpp"

namespace splinemart::cantor {

double cdf(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double x = t;
  double value = 0.0;
  double scale = 0.5;
  for (int i = 0; i < 64; ++i) {
    x *= 3.0;
    const double digit = std::floor(x);
    x -= digit;
    if (digit == 1.0) return value + scale;
    if (digit == 2.0) value += scale;
    scale *= 0.5;
  }
  return value;
}

double measure(double a, double b) { return b <= a ? 0.0 : cdf(b) - cdf(a); }

double distance_to_support(double t) {
  if (t <= 0.0) return -t;
  if (t >= 1.0) return t - 1.0;
  double lo = 0.0;
  double len = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double a = lo + len / 3.0;
    const double b = lo + 2.0 * len / 3.0;
    if (t > a && t < b) return std::min(t - a, b - t);
    if (t >= b) lo = b;
    len /= 3.0;
  }
  return 0.0;
}

namespace {

// Chebyshev coefficients of a polynomial of degree <= n - 1 from its values at
// the n Chebyshev points y_l = cos((2l + 1) pi / (2n)).
template <class F>
Eigen::VectorXd chebyshev_coefficients(std::size_t n, F&& f) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const auto nd = static_cast<double>(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double theta = std::numbers::pi * (2.0 * static_cast<double>(l) + 1.0) / (2.0 * nd);
    const double v = f(std::cos(theta));
    for (std::size_t j = 0; j < n; ++j) {
      c[static_cast<Eigen::Index>(j)] += 2.0 / nd * v * std::cos(static_cast<double>(j) * theta);
    }
  }
  c[0] *= 0.5;
  return c;
}

double chebyshev_t(std::size_t j, double y) {
  return std::cos(static_cast<double>(j) * std::acos(std::clamp(y, -1.0, 1.0)));
}

// m_j = int T_j(2x - 1) dmu(x). In y = 2x - 1 the measure is the average of its
// images under y -> y/3 -+ 2/3, hence m_j = sum_i K_ji m_i with K_ji the
// Chebyshev coefficients of (T_j(y/3 - 2/3) + T_j(y/3 + 2/3)) / 2.
std::array<double, kMaxDegree + 1> chebyshev_moments() {
  std::array<double, kMaxDegree + 1> m{};
  m[0] = 1.0;
  for (std::size_t j = 1; j <= kMaxDegree; ++j) {
    const Eigen::VectorXd kj = chebyshev_coefficients(j + 1, [j](double y) {
      return 0.5 * (chebyshev_t(j, y / 3.0 - 2.0 / 3.0) + chebyshev_t(j, y / 3.0 + 2.0 / 3.0));
    });
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += kj[static_cast<Eigen::Index>(i)] * m[i];
    m[j] = s / (1.0 - kj[static_cast<Eigen::Index>(j)]);
  }
  return m;
}

QuadratureRule build_rule(std::size_t degree, const std::array<double, kMaxDegree + 1>& m) {
  const std::size_t n = degree + 1;
  const auto nd = static_cast<double>(n);
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double theta = std::numbers::pi * (2.0 * static_cast<double>(l) + 1.0) / (2.0 * nd);
    double w = 0.5 * m[0];
    for (std::size_t j = 1; j < n; ++j) w += m[j] * std::cos(static_cast<double>(j) * theta);
    r.nodes[l] = 0.5 * (std::cos(theta) + 1.0);
    r.weights[l] = 2.0 / nd * w;
  }
  return r;
}

}  // namespace

const QuadratureRule& rule(std::size_t degree) {
  static const auto table = [] {
    const auto m = chebyshev_moments();
    std::array<QuadratureRule, kMaxDegree + 1> t;
    for (std::size_t d = 0; d <= kMaxDegree; ++d) t[d] = build_rule(d, m);
    return t;
  }();
  if (degree > kMaxDegree) throw Error("Cantor rule degree too large");
  return table[degree];
}

}  // namespace splinemart::cantor
