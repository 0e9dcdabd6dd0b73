#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "splinemart/functions.hpp"
#include "splinemart/projection.hpp"
#include "test_util.hpp"

using namespace splinemart;
using nlohmann::json;

namespace {

FunctionSpec smooth(std::mt19937_64& rng) {
  const double a = 1 + 4 * testutil::uniform01(rng);
  const double b = 6 * testutil::uniform01(rng);
  const double c = -1 + 2 * testutil::uniform01(rng);
  return FunctionSpec::scalar("smooth", [=](double t) { return std::sin(a * t + b) + c * t * t; });
}

}  // namespace

TEST_CASE("projection reproduces the space") {
  std::mt19937_64 rng(21);
  for (int k = 1; k <= 5; ++k) {
    const auto space = testutil::random_space(rng, k, 25);
    const Spline s(space, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(space.dimension()), 1));
    const auto p = project_function(space, FunctionSpec::from_spline(s));
    CHECK((p.coefficients() - s.coefficients()).cwiseAbs().maxCoeff() <= 1e-10);
    const auto c = project_function(space, FunctionSpec::constant(Eigen::Vector2d(1.5, -2.0)));
    for (int q = 0; q < 20; ++q) {
      const auto v = c(testutil::uniform01(rng));
      CHECK(v[0] == doctest::Approx(1.5).epsilon(1e-12));
      CHECK(v[1] == doctest::Approx(-2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("k = 1 projection is the span average") {
  std::mt19937_64 rng(22);
  const auto space = testutil::random_space(rng, 1, 30);
  const auto f = make_function(json{{"name", "polynomial"}, {"coeffs", {0.3, -1.0, 2.0, 0.5}}});
  const auto p = project_function(space, f);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const double a = space.support_lo(i), b = space.support_hi(i);
    // Antiderivative in extended precision to keep the difference quotient clean.
    auto F = [](long double t) { return 0.3L * t - 0.5L * t * t + 2.0L / 3 * t * t * t + 0.125L * t * t * t * t; };
    const auto avg = static_cast<double>((F(b) - F(a)) / (static_cast<long double>(b) - a));
    CHECK(std::abs(p.coefficients()(static_cast<Eigen::Index>(i), 0) - avg) <= 1e-14 * std::max(1.0, std::abs(avg)));
  }
}

TEST_CASE("measure projections") {
  std::mt19937_64 rng(23);
  const auto space = testutil::random_space(rng, 3, 12, false);
  const DualBasis d(space);
  const double t0 = 0.4321;

  // Dirac: coefficients sum_i N_i(t0) a_ij, and the limit of shrinking bumps.
  const auto p = project_measure(d, MeasureSpec::dirac(t0, Eigen::VectorXd::Ones(1)));
  const auto& A = d.dense();
  for (Eigen::Index j = 0; j < A.rows(); ++j) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) v += basis_value(space, static_cast<std::size_t>(i), t0) * A(i, j);
    CHECK(p.coefficients()(j, 0) == doctest::Approx(v).epsilon(1e-12));
  }
  double prev = INFINITY;
  for (double w : {1e-2, 1e-3, 1e-4}) {
    const auto pb = project_function(d, bump(t0, w), 6);
    const double err = (pb.coefficients() - p.coefficients()).cwiseAbs().maxCoeff();
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-4);

  // Density measures match the function route.
  const auto g = smooth(rng);
  const auto pm = project_measure(d, MeasureSpec::from_density(g));
  const auto pf = project_function(d, g);
  CHECK((pm.coefficients() - pf.coefficients()).cwiseAbs().maxCoeff() <= 1e-14);

  // Mass is preserved: int P nu = nu([0,1]) since 1 lies in the space.
  const auto cm = project_measure(d, MeasureSpec::cantor_measure(8, Eigen::VectorXd::Constant(1, 2.0)));
  double mass = 0.0;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    mass += cm.coefficients()(static_cast<Eigen::Index>(i), 0) * basis_integral(space, i);
  }
  CHECK(mass == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("self-adjointness") {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + rep % 5;
    const DualBasis d(testutil::random_space(rng, k, 8 + rep % 20));
    CHECK(check_self_adjoint(d, smooth(rng), smooth(rng)) <= 1e-9);
  }
  const DualBasis d(testutil::random_space(rng, 3, 10));
  const auto f = smooth(rng);
  const std::vector<FunctionSpec> parts = {smooth(rng), smooth(rng), smooth(rng)};
  const auto defects = self_adjoint_defects(d, FunctionSpec::stack(parts), f);
  REQUIRE(defects.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto scalar = self_adjoint_defects(d, parts[c], f);
    CHECK(std::abs(defects[static_cast<Eigen::Index>(c)] - scalar[0]) <= 1e-12);
  }
  // Polynomials of degree < k lie in the space: both sides are exact.
  const DualBasis d4(testutil::random_space(rng, 4, 9));
  CHECK(check_self_adjoint(d4, FunctionSpec::polynomial({1, 2, 3}), FunctionSpec::polynomial({0, -1, 0, 2})) <= 1e-13);
}

TEST_CASE("L1 probe") {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 5; ++rep) {
    const DualBasis d(testutil::random_space(rng, 1, 20));
    CHECK(std::abs(shadrin_probe(d, 1e-3).ratio - 1.0) <= 1e-10);
  }
  for (double ratio : {0.5, 0.3}) {
    const auto program = KnotProgram::geometric_to_point(2, 0.5, ratio, Approach::both);
    for (std::size_t n : {10, 20, 30}) {
      const DualBasis d{SplineSpace(realize(program, n))};
      const auto r = shadrin_probe(d, 1e-4);
      CHECK(r.ratio >= 1.0 - 1e-9);
      CHECK(r.ratio <= 8.0);
    }
  }
}

TEST_CASE("maximal function") {
  const auto scales = default_scales();
  CHECK(maximal_function(FunctionSpec::constant(Eigen::Vector2d(3.0, 4.0)), 0.2, scales) ==
        doctest::Approx(5.0).epsilon(1e-12));

  // Indicator of [0,1/2] at 3/4: a dense sweep over a <= 3/4 <= b gives 2/3.
  const auto ind = make_function(json{{"name", "indicator"}, {"lo", 0.0}, {"hi", 0.5}});
  double oracle = 0.0;
  for (int i = 0; i <= 750; ++i) {
    for (int j = 750; j <= 1000; ++j) {
      if (i == j) continue;
      const double a = i / 1000.0, b = j / 1000.0;
      oracle = std::max(oracle, std::max(0.0, std::min(b, 0.5) - a) / (b - a));
    }
  }
  std::vector<double> with_075 = scales;
  with_075.push_back(0.75);
  CHECK(maximal_function(ind, 0.75, with_075) == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(oracle == doctest::Approx(2.0 / 3).epsilon(1e-12));

  // Projection of a member of the space: ratio at most 1.
  const SplineSpace s(Grid::uniform(2, 8));
  const Spline g(s, Eigen::VectorXd::LinSpaced(9, 1.0, 2.0));
  std::vector<SplineSpace> spaces = {s, SplineSpace(Grid::uniform(2, 16))};
  const std::vector<double> pts = {0.1, 0.5, 0.9};
  const auto rep = check_maximal_inequality(spaces, FunctionSpec::from_spline(g), pts, scales);
  CHECK(rep.max_ratio <= 1.0 + 1e-9);

  // Steps on dyadic grids: bounded ratios.
  std::vector<SplineSpace> dy;
  for (std::size_t n : {7, 15, 31, 63}) dy.emplace_back(realize(KnotProgram::dyadic_dense(2), n));
  std::vector<double> lattice;
  for (int i = 0; i < 64; ++i) lattice.push_back((i + 0.5) / 64);
  const auto step = make_function(json{{"name", "step"}, {"at", 0.3}});
  const auto srep = check_maximal_inequality(dy, step, lattice, scales);
  CHECK(srep.max_ratio <= 8.0);
}

TEST_CASE("modulus of smoothness") {
  CHECK(modulus_of_smoothness(FunctionSpec::polynomial({0.5, 2.0}), 2, 0.1) <= 1e-13);
  CHECK(modulus_of_smoothness(FunctionSpec::polynomial({0, 0, 1}), 2, 0.1) == doctest::Approx(0.02).epsilon(1e-9));
  const auto kink = make_function(json{{"name", "abs-centered"}, {"center", 0.5}});
  CHECK(modulus_of_smoothness(kink, 1, 0.125) == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("Jackson ratios") {
  std::vector<SplineSpace> spaces;
  for (int m = 3; m <= 9; ++m) spaces.emplace_back(realize(KnotProgram::dyadic_dense(3), (std::size_t{1} << m) - 1));
  const auto sine = make_function(json{{"name", "sin2pi"}});
  const auto rows = jackson_check(spaces, sine);
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  CHECK(hi / lo <= 10.0);
  for (const auto& r : jackson_check(spaces, make_function(json{{"name", "square"}}))) {
    CHECK(r.exact);
    CHECK(r.error <= 1e-9);
  }
}
