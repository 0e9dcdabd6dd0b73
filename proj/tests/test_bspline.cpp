#include <doctest.h>

#include <cmath>
#include <random>

#include "splinemart/bspline.hpp"
#include "splinemart/error.hpp"
#include "splinemart/functions.hpp"
#include "test_util.hpp"

using namespace splinemart;

TEST_CASE("basis values at small grids") {
  const SplineSpace s1(Grid({0, 0.5, 1}, 1));
  auto b = eval_basis(s1, 0.25);
  CHECK(b.first == 0);
  CHECK(b.count == 1);
  CHECK(b.values[0] == 1.0);
  CHECK(basis_value(s1, 1, 0.25) == 0.0);

  const SplineSpace s2(Grid({0, 0, 0.5, 1, 1}, 2));
  b = eval_basis(s2, 0.25);
  CHECK(b.first == 0);
  CHECK(b.values[0] == doctest::Approx(0.5));
  CHECK(b.values[1] == doctest::Approx(0.5));
  // Left limit at the right end.
  b = eval_basis(s2, 1.0);
  CHECK(b.values[b.count - 1] == 1.0);
}

TEST_CASE("partition of unity, non-negativity and the order-raising route") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 1 + rep % 5;
    const auto space = testutil::random_space(rng, k, 5 + rep % 40);
    for (int p = 0; p < 5; ++p) {
      const double t = testutil::uniform01(rng);
      const auto b = eval_basis(space, t);
      double sum = 0.0;
      for (std::size_t r = 0; r < b.count; ++r) {
        CHECK(b.values[r] >= 0.0);
        sum += b.values[r];
        CHECK(std::abs(b.values[r] - basis_value(space, b.first + r, t)) <= 1e-13);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("local support gives exact zeros") {
  std::mt19937_64 rng(2);
  const auto space = testutil::random_space(rng, 4, 20);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    for (int p = 0; p < 20; ++p) {
      const double t = testutil::uniform01(rng);
      if (t < space.support_lo(i) || t > space.support_hi(i)) CHECK(basis_value(space, i, t) == 0.0);
    }
  }
}

TEST_CASE("spline evaluation") {
  std::mt19937_64 rng(3);
  const auto space = testutil::random_space(rng, 3, 15);
  const auto dim = static_cast<Eigen::Index>(space.dimension());
  const Spline c(space, Eigen::MatrixXd::Constant(dim, 1, 2.5));
  for (int p = 0; p < 50; ++p) CHECK(c(testutil::uniform01(rng))[0] == doctest::Approx(2.5).epsilon(1e-14));

  // Linear reproduction through the Greville abscissae (any order >= 2).
  for (int k = 2; k <= 5; ++k) {
    const auto sk = testutil::random_space(rng, k, 12);
    const Spline lin(sk, greville(sk));
    for (int p = 0; p < 1000; ++p) {
      const double t = testutil::uniform01(rng);
      CHECK(std::abs(lin(t)[0] - t) <= 1e-13);
    }
  }

  Eigen::MatrixXd two = Eigen::MatrixXd::Random(dim, 2);
  const Spline v(space, two);
  for (int p = 0; p < 50; ++p) {
    const double t = testutil::uniform01(rng);
    CHECK(v(t)[0] == v.component(0)(t)[0]);
    CHECK(v(t)[1] == v.component(1)(t)[0]);
  }
}

TEST_CASE("basis integrals") {
  const SplineSpace s1(Grid({0, 0.3, 1}, 1));
  CHECK(basis_integral(s1, 0) == doctest::Approx(0.3));
  const SplineSpace s2(Grid({0, 0, 0.4, 1, 1}, 2));
  CHECK(basis_integral(s2, 1) == doctest::Approx(0.5).epsilon(1e-15));
  // Closed form (t_{i+k} - t_i) / k, checked against a many-node oracle too.
  std::mt19937_64 rng(4);
  const auto s4 = testutil::random_space(rng, 4, 25);
  for (std::size_t i = 0; i < s4.dimension(); ++i) {
    const double closed = s4.support_length(i) / 4.0;
    const double oracle = testutil::span_integral(s4, [&](double t) { return basis_value(s4, i, t); });
    CHECK(std::abs(basis_integral(s4, i) - closed) <= 1e-12);
    CHECK(std::abs(basis_integral(s4, i) - oracle) <= 1e-12);
  }
}

TEST_CASE("knot insertion preserves the function and is convex") {
  // k = 1: the split span's coefficient is duplicated.
  const SplineSpace s1(Grid({0, 0.5, 1}, 1));
  Eigen::MatrixXd c1(2, 1);
  c1 << 3.0, -1.0;
  const auto r1 = insert_knot(Spline(s1, c1), 0.25);
  REQUIRE(r1.coefficients().rows() == 3);
  CHECK(r1.coefficients()(0, 0) == 3.0);
  CHECK(r1.coefficients()(1, 0) == 3.0);
  CHECK(r1.coefficients()(2, 0) == -1.0);

  // k = 2: the new coefficient interpolates the control polygon.
  const SplineSpace s2(Grid({0, 0, 0.5, 1, 1}, 2));
  Eigen::MatrixXd c2(3, 1);
  c2 << 0.0, 2.0, 1.0;
  const Spline f2(s2, c2);
  const auto r2 = insert_knot(f2, 0.75);
  CHECK(r2.coefficients()(2, 0) == doctest::Approx(1.5));
  std::mt19937_64 rng(5);
  for (int p = 0; p < 1000; ++p) {
    const double t = testutil::uniform01(rng);
    CHECK(std::abs(r2(t)[0] - f2(t)[0]) <= 1e-13);
  }

  for (int rep = 0; rep < 500; ++rep) {
    const int k = 1 + rep % 5;
    const auto space = testutil::random_space(rng, k, 4 + rep % 10);
    const auto dim = static_cast<Eigen::Index>(space.dimension());
    const Spline s(space, Eigen::MatrixXd::Random(dim, 2));
    double x = testutil::uniform01(rng);
    const auto knots = space.knot_vector();
    if (std::count(knots.begin(), knots.end(), x) >= std::max(k - 1, 1)) continue;
    const auto r = insert_knot(s, x);
    const auto& a = s.coefficients();
    const auto& b = r.coefficients();
    // beta_i lies between alpha_{i-1} and alpha_i (indices clamped at the ends).
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0);
      const Eigen::Index hi = std::min<Eigen::Index>(i, a.rows() - 1);
      for (Eigen::Index c = 0; c < 2; ++c) {
        CHECK(b(i, c) >= std::min(a(lo, c), a(hi, c)) - 1e-15);
        CHECK(b(i, c) <= std::max(a(lo, c), a(hi, c)) + 1e-15);
      }
    }
    for (int p = 0; p < 5; ++p) {
      const double t = testutil::uniform01(rng);
      CHECK((r(t) - s(t)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("multiplicity overflow is rejected") {
  const SplineSpace s(Grid({0, 0, 0, 0.5, 0.5, 1, 1, 1}, 3));
  const Spline f(s, Eigen::MatrixXd::Ones(5, 1));
  CHECK_THROWS_AS((void)insert_knot(f, 0.5), MultiplicityError);
}

TEST_CASE("refinement") {
  std::mt19937_64 rng(6);
  for (int k = 1; k <= 5; ++k) {
    const auto interior = testutil::random_interior(rng, k, 8, false);
    auto finer = interior;
    for (double t : testutil::random_interior(rng, k, 20, false)) finer.push_back(t);
    std::sort(finer.begin(), finer.end());
    const SplineSpace coarse(Grid::from_interior(interior, k));
    const SplineSpace fine(Grid::from_interior(finer, k));
    const auto R = refinement_matrix(coarse, fine);
    CHECK(R.minCoeff() >= -1e-12);
    CHECK(R.maxCoeff() <= 1.0 + 1e-12);
    const Spline s(coarse, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(coarse.dimension()), 1));
    const auto r = refine(s, fine);
    for (int p = 0; p < 2000; ++p) {
      const double t = testutil::uniform01(rng);
      CHECK(std::abs(r(t)[0] - s(t)[0]) <= 1e-12);
    }
    const auto same = refine(s, coarse);
    CHECK((same.coefficients() - s.coefficients()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS((void)refine(r, coarse), NestingError);
  }
}

TEST_CASE("spline records round-trip") {
  std::mt19937_64 rng(8);
  const auto space = testutil::random_space(rng, 3, 7);
  const Spline s(space, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(space.dimension()), 2));
  const auto back = spline_from_json(spline_to_json(s));
  CHECK(back.space().knot_vector() == space.knot_vector());
  CHECK(back.coefficients() == s.coefficients());
}
