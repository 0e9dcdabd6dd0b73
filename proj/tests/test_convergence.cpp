#include <doctest.h>

#include <cmath>
#include <random>

#include "splinemart/convergence.hpp"
#include "splinemart/error.hpp"
#include "test_util.hpp"

using namespace splinemart;
using nlohmann::json;

namespace {

FunctionSpec exp_fn(double rate) {
  return make_function(json{{"name", "exp"}, {"rate", rate}});
}

}  // namespace

TEST_CASE("martingale consistency for function and measure sources") {
  const auto dyadic = KnotProgram::dyadic_dense(3);
  const std::vector<std::size_t> sched = {7, 15, 31, 63};
  const auto mf = make_martingale(dyadic, exp_fn(2.0), sched);
  CHECK(mf.max_defect() <= 1e-9);
  const auto md = make_martingale(dyadic, MeasureSpec::dirac(1.0 / 3, Eigen::VectorXd::Ones(1)), sched);
  CHECK(md.max_defect() <= 1e-9);
  const auto mc = make_martingale(dyadic, MeasureSpec::cantor_measure(8, Eigen::VectorXd::Ones(1)), sched);
  CHECK(mc.max_defect() <= 1e-9);
  // L1 norms of the Cantor martingale stay bounded.
  for (double l1 : mc.l1_norms()) CHECK(l1 <= 2.0);
  CHECK(mc.l1_norms().back() <= 1.25 * mc.l1_norms().front());

  CHECK_THROWS_AS((void)make_martingale(dyadic, exp_fn(1.0), {15, 7}), Error);
}

TEST_CASE("functional T") {
  const auto program = KnotProgram::dyadic_dense(2);
  const auto f = exp_fn(1.3);
  const auto mart = make_martingale(program, f, {3, 7, 15});
  // T(1) is the total mass.
  const SplineSpace s3(realize(program, 3));
  const Spline one(s3, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(s3.dimension()), 1));
  CHECK(functional_T(mart, one)[0] == doctest::Approx((std::exp(1.3) - 1) / 1.3).epsilon(1e-12));
  // T(N_i) = <f, N_i> by an independent quadrature.
  const SplineSpace s7(realize(program, 7));
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s7.dimension()), 1);
  for (std::size_t i = 0; i < s7.dimension(); ++i) {
    e.setZero();
    e(static_cast<Eigen::Index>(i), 0) = 1.0;
    const double oracle = testutil::span_integral(s7, [&](double t) { return f.scalar_value(t) * basis_value(s7, i, t); });
    CHECK(functional_T(mart, Spline(s7, e))[0] == doctest::Approx(oracle).epsilon(1e-12));
  }
  // Linearity.
  std::mt19937_64 rng(31);
  const auto dim = static_cast<Eigen::Index>(s7.dimension());
  const Spline a(s7, Eigen::MatrixXd::Random(dim, 1)), b(s7, Eigen::MatrixXd::Random(dim, 1));
  const Spline combo(s7, 2.0 * a.coefficients() - 0.5 * b.coefficients());
  const double lhs = functional_T(mart, combo)[0];
  const double rhs = 2.0 * functional_T(mart, a)[0] - 0.5 * functional_T(mart, b)[0];
  CHECK(std::abs(lhs - rhs) <= 1e-10);
}

TEST_CASE("limit basis with finitely many local knots") {
  const auto program = KnotProgram::explicit_list(3, {0.2, 0.45, 0.7});
  LimitBasisOptions opt;
  opt.schedule = {1, 2, 3};
  const auto lb = build_limit_basis(program, 0, opt);
  CHECK(lb.unsettled() == 0);
  CHECK_FALSE(lb.budget_exceeded);
  REQUIRE(lb.dimension() == 6);
  const SplineSpace ordinary(realize(program, 3));
  for (std::size_t j = 0; j < lb.dimension(); ++j) {
    CHECK(lb.stabilization_n[j] <= 3);
    for (double t : {0.05, 0.3, 0.6, 0.95}) CHECK(lb.basis(j, t) == doctest::Approx(basis_value(ordinary, j, t)).epsilon(1e-14));
  }
}

TEST_CASE("limit basis on the far side of a one-sided accumulation point") {
  const auto program = KnotProgram::geometric_to_point(3, 0.5, 0.5, Approach::left);
  const auto dec = decompose(program);
  LimitBasisOptions opt;
  opt.schedule = {5, 10, 20, 30, 40};
  const auto lb = build_limit_basis(program, 1, opt);
  CHECK(lb.left_padded);  // 1/2 is approached only from the other component
  CHECK(lb.unsettled() == 0);
  // Biorthogonality by quadrature on the local space.
  const auto& space = lb.space();
  for (std::size_t i = 0; i < lb.dimension(); ++i) {
    for (std::size_t j = 0; j < lb.dimension(); ++j) {
      const double v = testutil::span_integral(space, [&](double t) { return lb.dual(i, t) * lb.basis(j, t); });
      CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-8);
    }
  }
  CHECK(global_local_mismatch(lb, program, 40) <= 1e-9);
}

TEST_CASE("limit duals decay away from the anchor span") {
  const auto program = KnotProgram::geometric_to_point(3, 0.5, 0.5, Approach::left);
  LimitBasisOptions opt;
  opt.schedule = {10, 20, 40};
  const auto lb = build_limit_basis(program, 0, opt);
  const auto& space = lb.space();
  const DualBasis* ptr = &*lb.duals;
  const auto [C, q] = common_decay(std::span<const DualBasis* const>(&ptr, 1));
  CHECK(q < 1.0);
  for (double t : {0.1, 0.3, 0.45, 0.49}) {
    const auto span = lb.interval(t);
    const auto ibar = space.anchor(t);
    for (std::size_t j = 0; j < lb.dimension(); ++j) {
      const double d = static_cast<double>(j > ibar ? j - ibar : ibar - j);
      CHECK(std::abs(lb.dual(j, t)) <= 3.0 * C * std::pow(q, d - 2.0) / span.length() + 1e-12);
    }
  }
}

TEST_CASE("predicted limits in the trivial cases") {
  const auto dyadic = KnotProgram::dyadic_dense(2);
  const auto dec = decompose(dyadic);
  // f in S_m: prediction is f and the gaps vanish once f's knots are present.
  const SplineSpace s(realize(dyadic, 3));
  const Spline fs(s, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(s.dimension()), 1));
  const auto f = FunctionSpec::from_spline(fs);
  const auto mart = make_martingale(dyadic, f, {3, 7, 15});
  const auto pred = predicted_limit(mart, dec, {}, f);
  const std::vector<double> pts = {0.1, 0.33, 0.77};
  const auto rep = convergence_report(mart, pred, pts);
  for (double g : rep.final_gaps) CHECK(g <= 1e-10);
  CHECK(rep.pass);

  // A point mass on dense knots predicts zero away from the atom.
  const auto dirac = MeasureSpec::dirac(0.5, Eigen::VectorXd::Ones(1));
  const auto md = make_martingale(dyadic, dirac, {7, 15, 31});
  const auto pd = predicted_limit(md, dec, {}, std::nullopt);
  for (double t : pts) CHECK(pd(t)[0] == 0.0);
  CHECK(pd.certificate(0.3) == 0.0);
}

TEST_CASE("predicted limit matches large-n projections next to an accumulation point") {
  const auto program = KnotProgram::geometric_to_point(3, 0.5, 0.5, Approach::left);
  const auto dec = decompose(program);
  const auto f = exp_fn(1.5);
  const std::vector<std::size_t> sched = {5, 10, 20, 40};
  const auto mart = make_martingale(program, f, sched);
  LimitBasisOptions opt;
  opt.schedule = sched;
  std::vector<std::optional<LimitBasis>> bases(dec.components.size());
  for (std::size_t j = 0; j < bases.size(); ++j) bases[j] = build_limit_basis(program, j, opt);
  const auto pred = predicted_limit(mart, dec, std::move(bases), std::nullopt);
  const std::vector<double> right = {0.56, 0.7, 0.85, 0.97};
  const auto rep = convergence_report(mart, pred, right);
  for (std::size_t p = 0; p < right.size(); ++p) {
    CHECK(rep.final_gaps[p] <= 1e-6);
    CHECK(rep.certificates[p] <= 1e-8);
  }
  CHECK(rep.trend_ok);
  const std::vector<double> left = {0.1, 0.3, 0.42};
  const auto lrep = convergence_report(mart, pred, left, {1e-6, INFINITY});
  for (double g : lrep.final_gaps) CHECK(g <= 1e-6);
}

TEST_CASE("convergence report verdicts") {
  const auto dyadic = KnotProgram::dyadic_dense(2);
  const auto f = make_function(json{{"name", "sin2pi"}});
  const auto mart = make_martingale(dyadic, f, {7, 15, 31, 63, 127});
  const auto pred = predicted_limit(mart, decompose(dyadic), {}, f);
  const std::vector<double> pts = {0.2, 0.4, 0.65};
  auto rep = convergence_report(mart, pred, pts, {1e-3, 1e-8});
  CHECK(rep.pass);
  for (Eigen::Index p = 0; p < rep.gaps.rows(); ++p) {
    for (Eigen::Index n = 0; n < rep.gaps.cols(); ++n) CHECK(rep.gaps(p, n) >= 0.0);
    CHECK(rep.gaps(p, rep.gaps.cols() - 1) <= rep.gaps(p, 0));
  }
  rep = convergence_report(mart, pred, pts, {1e-12, 1e-8});
  CHECK_FALSE(rep.pass);

  // Density plus an atom: off the atom the limit is the density.
  MeasureSpec mixed = MeasureSpec::from_density(f);
  mixed.atoms.push_back({1.0 / 3, Eigen::VectorXd::Ones(1)});
  const auto mm = make_martingale(dyadic, mixed, {31, 127, 511});
  const auto pm = predicted_limit(mm, decompose(dyadic), {}, f);
  const std::vector<double> off = {0.1, 0.6, 0.9};
  const auto rm = convergence_report(mm, pm, off, {5e-3, 1e-8});
  CHECK(rm.trend_ok);
  for (double g : rm.final_gaps) CHECK(g <= 5e-3);
}

TEST_CASE("singular decay") {
  const auto dyadic = KnotProgram::dyadic_dense(2);
  const std::vector<std::size_t> sched = {31, 63, 127, 255, 511};
  const std::vector<double> pts = {0.1, 0.5, 0.7, 0.9};
  const auto rep = singular_decay_experiment(dyadic, MeasureSpec::dirac(1.0 / 3, Eigen::VectorXd::Ones(1)), pts, sched);
  CHECK(rep.dominated);
  CHECK(rep.min_decay_factor >= 10.0);
  CHECK(rep.q < 1.0);

  const auto cantor = MeasureSpec::cantor_measure(8, Eigen::VectorXd::Ones(1));
  const std::vector<double> mid = {0.5};
  const auto crep = singular_decay_experiment(dyadic, cantor, mid, sched);
  CHECK(crep.dominated);
  CHECK(crep.norms(0, 4) < crep.norms(0, 0));

  // The atom itself violates the margin.
  const std::vector<double> at = {1.0 / 3};
  CHECK_THROWS_AS((void)singular_decay_experiment(dyadic, MeasureSpec::dirac(1.0 / 3, Eigen::VectorXd::Ones(1)), at, sched),
                  Error);
  // Negative control: the projected atom grows like 1 / lambda(I_n) at its location.
  const auto md = make_martingale(dyadic, MeasureSpec::dirac(1.0 / 3, Eigen::VectorXd::Ones(1)), sched);
  CHECK(std::abs(md.last()(1.0 / 3)[0]) > 10.0 * std::abs(md.term(0)(1.0 / 3)[0]));
}
