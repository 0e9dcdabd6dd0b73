#include <doctest.h>

#include <cmath>
#include <random>

#include "splinemart/banded.hpp"
#include "splinemart/cantor.hpp"
#include "splinemart/error.hpp"
#include "splinemart/gram.hpp"
#include "test_util.hpp"

using namespace splinemart;

TEST_CASE("Gram matrices of small spaces") {
  const SplineSpace s1(Grid({0, 0.3, 1}, 1));
  auto g = gram_matrix(s1).to_dense();
  CHECK(g(0, 0) == doctest::Approx(0.3));
  CHECK(g(1, 1) == doctest::Approx(0.7));
  CHECK(g(0, 1) == 0.0);

  const SplineSpace s2(Grid({0, 0, 1, 1}, 2));
  g = gram_matrix(s2).to_dense();
  CHECK(g(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(g(0, 1) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(g(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("Gram entries agree with an independent quadrature and vanish off the band") {
  std::mt19937_64 rng(11);
  for (int k = 1; k <= 5; ++k) {
    const auto space = testutil::random_space(rng, k, 15);
    const auto g = gram_matrix(space).to_dense();
    for (std::size_t i = 0; i < space.dimension(); ++i) {
      for (std::size_t j = 0; j < space.dimension(); ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        if (i + static_cast<std::size_t>(k) <= j || j + static_cast<std::size_t>(k) <= i) {
          CHECK(g(ii, jj) == 0.0);
          continue;
        }
        const double oracle = testutil::span_integral(
            space, [&](double t) { return basis_value(space, i, t) * basis_value(space, j, t); });
        CHECK(std::abs(g(ii, jj) - oracle) <= 1e-13);
      }
    }
  }
}

TEST_CASE("k = 1 duals are normalized indicators") {
  const DualBasis d(SplineSpace(Grid({0, 0.25, 1}, 1)));
  CHECK(d.dense()(0, 0) == doctest::Approx(4.0));
  CHECK(d.dense()(1, 1) == doctest::Approx(1.0 / 0.75));
  CHECK(d.dense()(0, 1) == 0.0);
  CHECK(d.eval(0, 0.1) == doctest::Approx(4.0));
  CHECK(d.eval(0, 0.5) == 0.0);
}

TEST_CASE("A G = I and biorthogonality on random spaces") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + rep % 5;
    const auto space = testutil::random_space(rng, k, 5 + rep % 30);
    const DualBasis d(space);
    const auto G = d.gram().to_dense();
    const auto dim = G.rows();
    CHECK((d.dense() * G - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() <= 1e-8);
    // <N_i*, N_j> by an independent many-node quadrature.
    for (std::size_t i = 0; i < space.dimension(); i += 3) {
      for (std::size_t j = 0; j < space.dimension(); ++j) {
        const double v = testutil::span_integral(space, [&](double t) { return d.eval(i, t) * basis_value(space, j, t); },
                                                 12, 1);
        CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("row lookups agree with the dense inverse") {
  std::mt19937_64 rng(13);
  const auto space = testutil::random_space(rng, 3, 20);
  const DualBasis d(space);
  const auto A = dual_coefficients(space);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    CHECK((d.row(i) - A.row(static_cast<Eigen::Index>(i)).transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const double t = 0.37;
  const auto all = d.eval_all(t);
  for (std::size_t i = 0; i < space.dimension(); ++i) CHECK(all[static_cast<Eigen::Index>(i)] == doctest::Approx(d.eval(i, t)));
}

TEST_CASE("banded Cholesky") {
  std::mt19937_64 rng(14);
  const std::size_t n = 30, bw = 3;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  BandedSPDMatrix m(n, bw);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j <= std::min(n - 1, i + bw); ++j) {
      const double v = i == j ? 10.0 : testutil::uniform01(rng);
      m.add(i, j, v);
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  CHECK((m.to_dense() - dense).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd b = Eigen::VectorXd::Random(static_cast<Eigen::Index>(n));
  m.factor();
  const Eigen::VectorXd x = m.solve(b);
  const Eigen::VectorXd oracle = dense.llt().solve(b);
  CHECK((x - oracle).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m.multiply(x) - b).cwiseAbs().maxCoeff() <= 1e-12);

  BandedSPDMatrix bad(2, 1);
  bad.add(0, 0, 1.0);
  bad.add(0, 1, 2.0);
  bad.add(1, 1, 1.0);
  CHECK_THROWS_AS(bad.factor(), FactorizationError);
}

TEST_CASE("uniform k = 2 decay matches the tridiagonal Toeplitz oracle") {
  // Interior rows of the inverse of tridiag(1, 4, 1) decay like (2 - sqrt 3)^m.
  const double oracle = 2.0 - std::sqrt(3.0);
  const auto fit = fit_decay(SplineSpace(Grid::uniform(2, 201)));
  CHECK(std::abs(fit.q_hat - oracle) <= 0.02);
  CHECK(fit.q_hat < 1.0);
  // Residual bound: every kept offset within C_hat.
  for (std::size_t m = 0; m < fit.residuals.size(); ++m) {
    if (!std::isnan(fit.residuals[m])) CHECK(fit.residuals[m] <= fit.C_hat * (1 + 1e-12));
  }
  Eigen::MatrixXd toeplitz = Eigen::MatrixXd::Zero(200, 200);
  for (int i = 0; i < 200; ++i) {
    toeplitz(i, i) = 4.0;
    if (i + 1 < 200) toeplitz(i, i + 1) = toeplitz(i + 1, i) = 1.0;
  }
  const Eigen::MatrixXd inv = toeplitz.inverse();
  CHECK(inv(100, 101) / inv(100, 100) == doctest::Approx(-oracle).epsilon(1e-10));
}

TEST_CASE("decay fit corner cases") {
  CHECK(fit_decay(SplineSpace(Grid::uniform(1, 20))).q_hat == 0.0);
  CHECK_THROWS_AS((void)fit_decay(SplineSpace(Grid::uniform(3, 1))), Error);
  const DualBasis d(SplineSpace(Grid::uniform(3, 60)));
  const auto fit = fit_decay(d);
  CHECK(decay_constant(d, fit.q_hat) == doctest::Approx(fit.C_hat).epsilon(1e-12));
}

TEST_CASE("Cantor measure moments and distribution function") {
  CHECK(cantor::cdf(0.25) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(cantor::cdf(0.5) == doctest::Approx(0.5));
  CHECK(cantor::measure(1.0 / 3, 2.0 / 3) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cantor::distance_to_support(0.5) == doctest::Approx(1.0 / 6));
  double m1 = 0.0, m2 = 0.0, mass = 0.0;
  const std::vector<double> breaks{};
  cantor::for_each_node(breaks, 2, 3, [&](double x, double w) {
    mass += w;
    m1 += w * x;
    m2 += w * x * x;
  });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(3.0 / 8).epsilon(1e-14));
}
