#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "splinemart/error.hpp"
#include "splinemart/knots.hpp"
#include "test_util.hpp"

using namespace splinemart;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("realize augments and sorts the first n knots") {
  CHECK(vec(realize(KnotProgram::explicit_list(2, {0.5}), 1).knots()) ==
        std::vector<double>{0, 0, 0.5, 1, 1});
  CHECK_THROWS_AS((void)realize(KnotProgram::explicit_list(3, {0.5, 0.5, 0.5}), 3), MultiplicityError);
  CHECK(vec(realize(KnotProgram::dyadic_dense(2), 3).knots()) ==
        std::vector<double>{0, 0, 0.25, 0.5, 0.75, 1, 1});
  CHECK(vec(realize(KnotProgram::dyadic_dense(3), 0).knots()) == std::vector<double>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("programs emit knots in (0,1) with bounded multiplicity and nested prefixes") {
  const std::vector<KnotProgram> programs = {
      KnotProgram::dyadic_dense(3),
      KnotProgram::uniform_dense(2, 3),
      KnotProgram::geometric_to_point(4, 0.5, 0.7, Approach::both),
      KnotProgram::dense_in_subinterval(2, 0.2, 0.6),
      KnotProgram::concatenation(3, {KnotProgram::geometric_to_point(3, 0.3, 0.6, Approach::right),
                                     KnotProgram::dense_in_subinterval(3, 0.5, 0.9)}),
  };
  for (const auto& p : programs) {
    const auto knots = p.generate(60);
    for (double t : knots) {
      CHECK(t > 0.0);
      CHECK(t < 1.0);
    }
    for (std::size_t n = 0; n < 60; ++n) {
      auto a = vec(realize(p, n).knots());
      auto b = vec(realize(p, n + 1).knots());
      CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST_CASE("mesh width") {
  CHECK(mesh_width(Grid({0, 0, 0.3, 1, 1}, 2)) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(mesh_width(Grid({0, 0.5, 1}, 1)) == 0.5);
  for (int m = 1; m <= 8; ++m) {
    const auto n = (std::size_t{1} << m) - 1;
    CHECK(mesh_width(realize(KnotProgram::dyadic_dense(2), n)) == std::ldexp(1.0, -m));
  }
}

TEST_CASE("grid interval uses the left span at shared points") {
  const Grid g2({0, 0, 0.3, 1, 1}, 2);
  auto s = grid_interval(g2, 0.4);
  CHECK(s.lo == 0.3);
  CHECK(s.hi == 1.0);
  const Grid g3({0, 0, 0, 0.3, 0.3, 1, 1, 1}, 3);
  s = grid_interval(g3, 0.3);
  CHECK(s.lo == 0.0);
  CHECK(s.hi == 0.3);
  const Grid g1({0, 0.5, 1}, 1);
  s = grid_interval(g1, 0.0);
  CHECK(s.lo == 0.0);
  CHECK(s.hi == 0.5);
}

TEST_CASE("anchor index") {
  CHECK(anchor_index(Grid({0, 0.5, 1}, 1), 0.25) == 0);
  CHECK(anchor_index(Grid({0, 0, 0.5, 1, 1}, 2), 0.75) == 2);

  // Exhaustive scan oracle: the largest i whose support contains I(t).
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + rep % 5;
    const Grid g = Grid::from_interior(testutil::random_interior(rng, k, 3 + rep % 17), k);
    const auto knots = g.knots();
    for (int p = 0; p < 5; ++p) {
      const double t = testutil::uniform01(rng);
      const auto span = grid_interval(g, t);
      std::size_t expect = 0;
      for (std::size_t i = 0; i < g.dimension(); ++i) {
        if (knots[i] <= span.lo && span.hi <= knots[i + static_cast<std::size_t>(k)]) expect = i;
      }
      const auto i = anchor_index(g, t);
      CHECK(i == expect);
      CHECK(knots[i] <= span.lo);
      CHECK(span.hi <= knots[i + static_cast<std::size_t>(k)]);
      if (i + 1 < g.dimension()) CHECK_FALSE(knots[i + 1] <= span.lo);
    }
  }
}

TEST_CASE("hull length") {
  const Grid g1({0, 0.5, 1}, 1);
  CHECK(hull_length(g1, 0, 1) == 1.0);
  CHECK(hull_length(g1, 1, 1) == 0.5);
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 1 + rep % 4;
    const Grid g = Grid::from_interior(testutil::random_interior(rng, k, 12), k);
    const auto t = g.knots();
    const auto uk = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < g.dimension(); ++i) {
      CHECK(hull_length(g, i, i) == doctest::Approx(t[i + uk] - t[i]).epsilon(1e-15));
      for (std::size_t j = 0; j < g.dimension(); ++j) {
        const double oracle = std::max(t[i + uk], t[j + uk]) - std::min(t[i], t[j]);
        CHECK(hull_length(g, i, j) == doctest::Approx(oracle).epsilon(1e-15));
        CHECK(hull_length(g, i, j) == hull_length(g, j, i));
        CHECK(hull_length(g, i, j) >= std::max(t[i + uk] - t[i], t[j + uk] - t[j]));
      }
    }
  }
}

TEST_CASE("decomposition of a one-sided geometric program") {
  const auto dec = decompose(KnotProgram::geometric_to_point(2, 0.5, 0.5, Approach::left));
  REQUIRE(dec.components.size() == 2);
  const auto& left = dec.components[0];
  const auto& right = dec.components[1];
  CHECK(left.lo == 0.0);
  CHECK(left.hi == 0.5);
  CHECK(left.lo_in_u);
  CHECK_FALSE(left.hi_in_b);  // knots inside U_1 converge to 1/2
  CHECK(right.lo == 0.5);
  CHECK(right.lo_in_b);       // none inside U_2 do
  CHECK(right.hi_in_u);
  CHECK(right.in_v(0.5));
  CHECK_FALSE(left.in_v(0.5));
  CHECK(dec.complement_measure() == 0.0);
  CHECK(dec.boundary_points() == std::vector<double>{0.5});
}

TEST_CASE("decomposition of dense and finite programs") {
  const auto dense = decompose(KnotProgram::dyadic_dense(2));
  CHECK(dense.components.empty());
  CHECK(dense.complement_measure() == doctest::Approx(1.0));
  CHECK_FALSE(dense.in_v(0.3));

  const auto finite = decompose(KnotProgram::explicit_list(2, {0.2, 0.7}));
  REQUIRE(finite.components.size() == 1);
  CHECK(finite.components[0].lo == 0.0);
  CHECK(finite.components[0].hi == 1.0);
  CHECK(finite.components[0].in_v(0.0));
  CHECK(finite.components[0].in_v(1.0));
  CHECK(finite.complement_measure() == 0.0);

  const auto sub = decompose(KnotProgram::dense_in_subinterval(2, 0.25, 0.75));
  REQUIRE(sub.components.size() == 2);
  CHECK(sub.components[0].hi == 0.25);
  CHECK(sub.components[1].lo == 0.75);
  CHECK(sub.complement_measure() == doctest::Approx(0.5));
}

TEST_CASE("realized knots respect the declared approach") {
  const auto p = KnotProgram::geometric_to_point(2, 0.5, 0.8, Approach::left);
  const auto dec = decompose(p);
  for (double t : p.generate(100)) CHECK(t < 0.5);  // nothing enters U_2
  CHECK(dec.components[1].lo_in_b);
}

TEST_CASE("estimated accumulation matches the declared set") {
  // Ratio 1/2 stops near 53 knots (double resolution); 0.9 carries 200.
  const auto geo = KnotProgram::geometric_to_point(2, 0.5, 0.9, Approach::left);
  const auto est = estimate_accumulation(geo, 200, 1e-3);
  REQUIRE_FALSE(est.empty());
  for (double x : est) CHECK(std::abs(x - 0.5) <= 1e-3);

  const auto five = KnotProgram::explicit_list(2, {0.1, 0.3, 0.5, 0.7, 0.9});
  CHECK(estimate_accumulation(five, 5, 0.05).empty());

  const auto sub = KnotProgram::dense_in_subinterval(2, 0.2, 0.6);
  const auto net = estimate_accumulation(sub, 10000, 1e-2);
  CHECK(hausdorff_distance(net, sub.declared_accumulation(), 1e-3) <= 1e-2);
}
