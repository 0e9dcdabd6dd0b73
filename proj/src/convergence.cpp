#include "splinemart/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "splinemart/error.hpp"

namespace splinemart {

MeasureSpec source_measure(const MartingaleSource& source) {
  if (const auto* f = std::get_if<FunctionSpec>(&source)) return MeasureSpec::from_density(*f);
  return std::get<MeasureSpec>(source);
}

namespace {

void check_schedule(const std::vector<std::size_t>& schedule, const KnotProgram& program) {
  if (schedule.empty()) throw Error("schedule must not be empty");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1]) throw Error("schedule must be strictly increasing");
  }
  if (schedule.back() > program.capacity()) {
    throw Error("schedule exceeds the capacity (" + std::to_string(program.capacity()) +
                ") of the knot program");
  }
}

Spline project_source(const DualBasis& duals, const MartingaleSource& source, std::size_t depth) {
  if (const auto* f = std::get_if<FunctionSpec>(&source)) return project_function(duals, *f, depth);
  return project_measure(duals, std::get<MeasureSpec>(source), depth);
}

}  // namespace

// ---------------------------------------------------------------------------
// Martingales

double consistency_defect(const Spline& fine, const DualBasis& coarse_duals, const Spline& coarse) {
  const auto back = project_function(coarse_duals, FunctionSpec::from_spline(fine));
  const double scale = std::max(1.0, coarse.coefficients().cwiseAbs().maxCoeff());
  return (back.coefficients() - coarse.coefficients()).cwiseAbs().maxCoeff() / scale;
}

SplineMartingale::SplineMartingale(KnotProgram program, MartingaleSource source,
                                   std::vector<std::size_t> schedule, MartingaleOptions options)
    : program_(std::move(program)),
      source_(std::move(source)),
      schedule_(std::move(schedule)),
      options_(options) {
  check_schedule(schedule_, program_);
  output_dim_ = std::visit([](const auto& s) { return s.dimension(); }, source_);
  for (std::size_t n : schedule_) {
    duals_.emplace_back(SplineSpace(realize(program_, n)));
    terms_.push_back(project_source(duals_.back(), source_, options_.quad_depth));
    l1_.push_back(l1_norm(terms_.back()));
  }
  const auto L = static_cast<Eigen::Index>(schedule_.size());
  defects_ = Eigen::MatrixXd::Zero(L, L);
  for (Eigen::Index n = 1; n < L; ++n) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      const double d = consistency_defect(terms_[static_cast<std::size_t>(n)], duals_[mi], terms_[mi]);
      defects_(m, n) = d;
      if (d > options_.max_defect) {
        std::ostringstream os;
        os << "consistency defect " << d << " between n=" << schedule_[mi]
           << " and n=" << schedule_[static_cast<std::size_t>(n)];
        throw ConsistencyError(os.str());
      }
    }
  }
}

SplineMartingale make_martingale(const KnotProgram& program, const MartingaleSource& source,
                                 const std::vector<std::size_t>& schedule,
                                 MartingaleOptions options) {
  return SplineMartingale(program, source, schedule, options);
}

Eigen::VectorXd functional_T(const SplineMartingale& mart, const Spline& f) {
  if (f.output_dim() != 1) throw Error("functional_T expects a scalar spline");
  std::optional<std::size_t> idx;
  for (std::size_t i = 0; i < mart.size(); ++i) {
    if (mart.space(i).contains(f.space())) {
      idx = i;
      break;
    }
  }
  if (!idx) throw Error("f does not belong to any space of the schedule");
  const auto fs = FunctionSpec::from_spline(f);
  auto pairing = [&](std::size_t i) {
    return integrate_product(FunctionSpec::from_spline(mart.term(i)), fs, mart.options().quad_depth);
  };
  const Eigen::VectorXd t = pairing(*idx);
  if (*idx + 1 < mart.size()) {
    const Eigen::VectorXd next = pairing(*idx + 1);
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    const double d = (next - t).cwiseAbs().maxCoeff() / scale;
    if (d > 1e-8) {
      throw ConsistencyError("T(f) changes by " + std::to_string(d) + " between schedule entries");
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Limit basis

std::vector<double> local_knots(const KnotProgram& program, const Component& component,
                                std::size_t n) {
  const int k = program.order();
  auto all = program.generate(std::min(n, program.capacity()));
  std::vector<double> s;
  for (double t : all) {
    if (component.in_v(t)) s.push_back(t);
  }
  std::sort(s.begin(), s.end());
  auto pad = [&](double x, bool front) {
    const auto have = std::count(s.begin(), s.end(), x);
    for (auto i = have; i < k; ++i) {
      if (front) {
        s.insert(s.begin(), x);
      } else {
        s.push_back(x);
      }
    }
  };
  if (component.lo_in_v()) pad(component.lo, true);
  if (component.hi_in_v()) pad(component.hi, false);
  return s;
}

namespace {

using Tuple = std::vector<double>;

std::map<Tuple, std::size_t> tuple_index(const SplineSpace& space) {
  std::map<Tuple, std::size_t> m;
  const auto knots = space.knots();
  const auto k = static_cast<std::size_t>(space.order());
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    m.emplace(Tuple(knots.begin() + static_cast<std::ptrdiff_t>(i),
                    knots.begin() + static_cast<std::ptrdiff_t>(i + k + 1)),
              i);
  }
  return m;
}

Tuple tuple_of(const SplineSpace& space, std::size_t i) {
  const auto knots = space.knots();
  const auto k = static_cast<std::size_t>(space.order());
  return {knots.begin() + static_cast<std::ptrdiff_t>(i),
          knots.begin() + static_cast<std::ptrdiff_t>(i + k + 1)};
}

// Three interior points of each span of `space` inside [lo, hi].
std::vector<double> support_lattice(const SplineSpace& space, double lo, double hi) {
  std::vector<double> pts;
  for (const auto& span : space.spans()) {
    if (span.hi <= lo || span.lo >= hi) continue;
    for (double f : {0.25, 0.5, 0.75}) pts.push_back(span.lo + f * span.length());
  }
  return pts;
}

bool usable_space(const std::vector<double>& knots, int k) {
  if (knots.size() < static_cast<std::size_t>(k) + 1) return false;
  return knots.front() < knots.back();
}

}  // namespace

std::size_t LimitBasis::unsettled() const {
  return static_cast<std::size_t>(std::count(settled.begin(), settled.end(), false));
}

double LimitBasis::basis(std::size_t j, double t) const {
  if (!duals || !component.in_v(t)) return 0.0;
  const auto b = eval_basis(space(), t);
  if (j < b.first || j >= b.first + b.count) return 0.0;
  return b.values[j - b.first];
}

double LimitBasis::dual(std::size_t j, double t) const {
  if (!duals || !component.in_v(t)) return 0.0;
  return duals->eval(j, t);
}

KnotSpan LimitBasis::interval(double t) const { return grid_interval(space().knots(), t); }

LimitBasis build_limit_basis(const KnotProgram& program, std::size_t j0,
                             const LimitBasisOptions& options) {
  const auto dec = decompose(program);
  if (j0 >= dec.components.size()) {
    throw Error("component index " + std::to_string(j0) + " out of range (" +
                std::to_string(dec.components.size()) + " components)");
  }
  LimitBasis lb;
  lb.component_index = j0;
  lb.component = dec.components[j0];
  lb.order = program.order();
  lb.left_padded = lb.component.lo_in_v();
  lb.right_padded = lb.component.hi_in_v();

  std::vector<std::size_t> sweep = options.schedule;
  const std::size_t cap = std::min(options.budget, program.capacity());
  if (sweep.empty()) {
    for (std::size_t n = 8; n < cap; n *= 2) sweep.push_back(n);
    if (cap > 0) sweep.push_back(cap);
  }
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i] <= sweep[i - 1]) throw Error("limit-basis sweep must be strictly increasing");
  }
  if (!sweep.empty() && sweep.back() > program.capacity()) {
    throw Error("limit-basis sweep exceeds the program capacity");
  }

  std::vector<std::size_t> ns;
  std::vector<DualBasis> spaces;
  for (std::size_t n : sweep) {
    auto s = local_knots(program, lb.component, n);
    if (!usable_space(s, lb.order)) continue;
    spaces.emplace_back(SplineSpace(std::move(s), lb.order));
    ns.push_back(n);
  }
  if (spaces.empty()) {
    lb.budget_exceeded = true;
    lb.report = "no local spline space could be formed within the n budget";
    return lb;
  }

  const DualBasis& fin = spaces.back();
  lb.final_n = ns.back();
  const std::size_t dim = fin.dimension();
  lb.stabilization_n.assign(dim, lb.final_n);
  lb.settled.assign(dim, false);

  std::vector<std::map<Tuple, std::size_t>> indices;
  for (const auto& d : spaces) indices.push_back(tuple_index(d.space()));

  const std::size_t L = spaces.size();
  // A finite list that has been read to the end admits no later knots.
  const bool exhausted = program.family() == KnotProgram::Family::explicit_list &&
                         lb.final_n >= program.capacity();
  for (std::size_t j = 0; j < dim; ++j) {
    const Tuple tau = tuple_of(fin.space(), j);
    const auto pts = support_lattice(fin.space(), tau.front(), tau.back());
    std::vector<double> ref;
    double scale = 1.0;
    for (double t : pts) {
      ref.push_back(fin.eval(j, t));
      scale = std::max(scale, std::abs(ref.back()));
    }
    std::size_t stable = L - 1;
    for (std::size_t s = L - 1; s-- > 0;) {
      const auto it = indices[s].find(tau);
      if (it == indices[s].end()) break;
      double diff = 0.0;
      for (std::size_t p = 0; p < pts.size(); ++p) {
        diff = std::max(diff, std::abs(spaces[s].eval(it->second, pts[p]) - ref[p]));
      }
      if (diff > options.tol * scale) break;
      stable = s;
    }
    lb.stabilization_n[j] = ns[stable];
    lb.settled[j] = exhausted || stable + 1 < L;
  }

  std::ostringstream os;
  os << "component " << j0 << " [" << lb.component.lo << ", " << lb.component.hi << "], "
     << dim << " local B-splines at n=" << lb.final_n << ", " << lb.unsettled()
     << " not stabilized";
  lb.budget_exceeded = lb.unsettled() == dim;
  if (lb.budget_exceeded) os << " (budget exceeded)";
  lb.report = os.str();
  lb.duals.emplace(spaces.back());
  return lb;
}

double global_local_mismatch(const LimitBasis& basis, const KnotProgram& program, std::size_t n) {
  if (!basis.duals) return std::numeric_limits<double>::infinity();
  const auto& comp = basis.component;
  const SplineSpace global(realize(program, n));
  const auto local_index = tuple_index(basis.space());
  const auto knots = global.knots();
  const auto k = static_cast<std::size_t>(global.order());
  double worst = 0.0;
  for (std::size_t i = 0; i < global.dimension(); ++i) {
    const double lo = knots[i];
    const double hi = knots[i + k];
    // Positive-measure overlap with V and no excluded boundary point inside.
    if (std::min(hi, comp.hi) <= std::max(lo, comp.lo)) continue;
    if (!comp.lo_in_v() && lo <= comp.lo) continue;
    if (!comp.hi_in_v() && hi >= comp.hi) continue;
    Tuple tau(knots.begin() + static_cast<std::ptrdiff_t>(i),
              knots.begin() + static_cast<std::ptrdiff_t>(i + k + 1));
    for (double& x : tau) x = std::clamp(x, comp.lo, comp.hi);
    const auto it = local_index.find(tau);
    if (it == local_index.end()) continue;
    const double a = std::max(lo, comp.lo);
    const double b = std::min(hi, comp.hi);
    for (int p = 0; p <= 64; ++p) {
      const double t = a + (b - a) * p / 64.0;
      if (!comp.in_v(t)) continue;
      const auto gb = eval_basis(global, t);
      const double gv = (i >= gb.first && i < gb.first + gb.count) ? gb.values[i - gb.first] : 0.0;
      worst = std::max(worst, std::abs(gv - basis.basis(it->second, t)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Predicted limit

PredictedLimit::PredictedLimit(Decomposition decomposition,
                               std::vector<std::optional<LimitBasis>> bases,
                               std::vector<Eigen::MatrixXd> tvals,
                               std::optional<FunctionSpec> g_abscont,
                               std::vector<std::pair<double, double>> decay, double mass_bound,
                               std::size_t output_dim)
    : dec_(std::move(decomposition)),
      bases_(std::move(bases)),
      tvals_(std::move(tvals)),
      g_(std::move(g_abscont)),
      decay_(std::move(decay)),
      mass_(mass_bound),
      d_(output_dim) {
  coeffs_.resize(bases_.size());
  for (std::size_t j = 0; j < bases_.size(); ++j) {
    if (bases_[j] && bases_[j]->duals) coeffs_[j] = bases_[j]->duals->solve(tvals_[j]);
  }
}

namespace {

std::optional<std::size_t> owning_component(const Decomposition& dec, double t) {
  if (auto c = dec.component_of(t)) return c;
  for (std::size_t j = 0; j < dec.components.size(); ++j) {
    if (dec.components[j].in_v(t)) return j;
  }
  return std::nullopt;
}

}  // namespace

Eigen::VectorXd PredictedLimit::operator()(double t) const {
  const auto d = static_cast<Eigen::Index>(d_);
  const auto comp = owning_component(dec_, t);
  if (!comp) {
    if (g_) return (*g_)(t);
    return Eigen::VectorXd::Zero(d);
  }
  const auto& b = bases_[*comp];
  if (!b || !b->duals) return Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  const auto bv = eval_basis(b->space(), t);
  for (std::size_t r = 0; r < bv.count; ++r) {
    v += bv.values[r] * coeffs_[*comp].row(static_cast<Eigen::Index>(bv.first + r)).transpose();
  }
  return v;
}

double PredictedLimit::certificate(double t) const {
  const auto comp = owning_component(dec_, t);
  if (!comp) return 0.0;
  const auto& b = bases_[*comp];
  if (!b || !b->duals) return std::numeric_limits<double>::infinity();
  const auto& space = b->space();
  if (t < space.domain_lo() || t > space.domain_hi()) return std::numeric_limits<double>::infinity();
  const auto [C, q] = decay_[*comp];
  const auto span = grid_interval(space.knots(), t);
  const auto ibar = static_cast<double>(span.index);
  const auto dim = static_cast<double>(space.dimension());
  double s = 0.0;
  for (std::size_t j = 0; j < b->settled.size(); ++j) {
    if (!b->settled[j]) s += std::pow(q, std::abs(static_cast<double>(j) - ibar));
  }
  if (q < 1.0) {
    if (!b->left_padded) s += std::pow(q, ibar + 1.0) / (1.0 - q);
    if (!b->right_padded) {
      if (ibar < dim) {
        s += std::pow(q, dim - ibar) / (1.0 - q);
      } else {
        for (double j = dim; j <= ibar; j += 1.0) s += std::pow(q, ibar - j);
        s += q / (1.0 - q);
      }
    }
  } else if (!b->left_padded || !b->right_padded) {
    return std::numeric_limits<double>::infinity();
  }
  return C * mass_ * s / span.length();
}

FunctionSpec PredictedLimit::as_function() const {
  auto self = std::make_shared<PredictedLimit>(*this);
  const std::size_t d = d_;
  return FunctionSpec("predicted-limit", FunctionSpec::Kind::closed_form, d,
                      [self, d](double t, double* out) {
                        const auto v = (*self)(t);
                        for (std::size_t c = 0; c < d; ++c) out[c] = v[static_cast<Eigen::Index>(c)];
                      });
}

PredictedLimit predicted_limit(const SplineMartingale& mart, const Decomposition& decomposition,
                               std::vector<std::optional<LimitBasis>> bases,
                               std::optional<FunctionSpec> g_abscont,
                               const PredictOptions& options) {
  bases.resize(decomposition.components.size());
  const MeasureSpec nu = source_measure(mart.source());
  const int k = mart.program().order();
  std::vector<Eigen::MatrixXd> tvals(bases.size());
  std::vector<std::pair<double, double>> decay(bases.size(), {0.0, 0.0});
  for (std::size_t j = 0; j < bases.size(); ++j) {
    if (!bases[j] || !bases[j]->duals) continue;
    const auto& lb = *bases[j];
    tvals[j] = basis_moments(lb.space(), nu, mart.options().quad_depth);
    double C = options.C;
    double q = options.q;
    if (!(q > 0.0)) {
      const auto fit = lb.dimension() > static_cast<std::size_t>(k)
                           ? fit_decay(*lb.duals)
                           : fit_decay(SplineSpace(Grid::uniform(k, 64)));
      q = fit.q_hat;
      C = fit.C_hat;
    }
    // |N_j*(t)| <= sum_i |a_ji| N_i(t) with k nonzero N_i(t), h_ji >= lambda(I(t)).
    const double dual_C = q > 0.0 ? C * k / std::pow(q, k - 1) : C * k;
    decay[j] = {dual_C, q};
  }
  return PredictedLimit(decomposition, std::move(bases), std::move(tvals), std::move(g_abscont),
                        std::move(decay), nu.total_variation(), mart.output_dim());
}

// ---------------------------------------------------------------------------
// Singular decay

std::pair<double, double> common_decay(std::span<const DualBasis* const> duals) {
  double q = 0.0;
  for (const auto* d : duals) q = std::max(q, fit_decay(*d).q_hat);
  double C = 0.0;
  for (const auto* d : duals) C = std::max(C, decay_constant(*d, q));
  return {C, q};
}

namespace {

std::vector<double> support_variation(const SplineSpace& space, const MeasureSpec& nu_s) {
  std::vector<double> theta(space.dimension());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = nu_s.singular_variation(space.support_lo(i), space.support_hi(i));
  }
  return theta;
}

double majorant(const SplineSpace& space, const std::vector<double>& theta, double t, double C,
                double q) {
  const auto b = eval_basis(space, t);
  double s = 0.0;
  for (std::size_t r = 0; r < b.count; ++r) {
    const std::size_t j = b.first + r;
    double inner = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (theta[i] == 0.0) continue;
      const double m = std::abs(static_cast<double>(i) - static_cast<double>(j));
      inner += std::pow(q, m) * theta[i] / space.hull(i, j);
    }
    s += inner * b.values[r];
  }
  return C * s;
}

}  // namespace

double singular_majorant(const SplineSpace& space, const MeasureSpec& nu_s, double t, double C,
                         double q) {
  return majorant(space, support_variation(space, nu_s), t, C, q);
}

SingularDecayReport singular_decay_experiment(const KnotProgram& program, const MeasureSpec& nu_s,
                                              std::span<const double> points,
                                              std::span<const std::size_t> schedule,
                                              const SingularDecayOptions& options) {
  if (nu_s.density) throw Error("singular decay needs a measure without density part");
  for (double t : points) {
    if (nu_s.singular_distance(t) < options.margin - 1e-12) {
      throw Error("sample point " + std::to_string(t) + " is closer than the margin to the singular support");
    }
  }
  std::vector<std::size_t> sched(schedule.begin(), schedule.end());
  check_schedule(sched, program);

  SingularDecayReport rep;
  rep.points.assign(points.begin(), points.end());
  rep.ns = sched;
  std::vector<DualBasis> duals;
  for (std::size_t n : sched) duals.emplace_back(SplineSpace(realize(program, n)));
  if (options.q > 0.0) {
    rep.C = options.C;
    rep.q = options.q;
  } else {
    std::vector<const DualBasis*> ptrs;
    for (const auto& d : duals) ptrs.push_back(&d);
    std::tie(rep.C, rep.q) = common_decay(ptrs);
  }

  const auto np = static_cast<Eigen::Index>(points.size());
  const auto nn = static_cast<Eigen::Index>(sched.size());
  const auto d = static_cast<Eigen::Index>(nu_s.dimension());
  rep.norms = Eigen::MatrixXd::Zero(np, nn);
  rep.bounds = Eigen::MatrixXd::Zero(np, nn);
  for (Eigen::Index s = 0; s < nn; ++s) {
    const auto& dual = duals[static_cast<std::size_t>(s)];
    const Spline g = project_measure(dual, nu_s, options.quad_depth);
    const auto theta = support_variation(dual.space(), nu_s);
    const double noise = 1e-13 * g.coefficients().cwiseAbs().maxCoeff();
    Eigen::MatrixXd vals(np, d);
    for (Eigen::Index p = 0; p < np; ++p) {
      const double t = points[static_cast<std::size_t>(p)];
      vals.row(p) = g(t).transpose();
      rep.norms(p, s) = vals.row(p).norm();
      rep.bounds(p, s) = majorant(dual.space(), theta, t, rep.C, rep.q);
      if (rep.norms(p, s) > rep.bounds(p, s) * (1.0 + 1e-9) + noise) rep.dominated = false;
    }
    rep.values.push_back(std::move(vals));
  }
  rep.min_decay_factor = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < np; ++p) {
    const double first = rep.norms(p, 0);
    const double last = rep.norms(p, nn - 1);
    const double factor = last > 0.0 ? first / last : std::numeric_limits<double>::infinity();
    rep.decay_factor.push_back(factor);
    rep.rate.push_back(nn > 1 && first > 0.0 ? std::pow(last / first, 1.0 / static_cast<double>(nn - 1)) : 1.0);
    rep.min_decay_factor = std::min(rep.min_decay_factor, factor);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

ConvergenceReport convergence_report(const SplineMartingale& mart, const PredictedLimit& predicted,
                                     std::span<const double> points,
                                     const ConvergenceThresholds& thresholds) {
  ConvergenceReport rep;
  rep.points.assign(points.begin(), points.end());
  rep.ns = mart.schedule();
  const auto np = static_cast<Eigen::Index>(points.size());
  const auto nn = static_cast<Eigen::Index>(mart.size());
  const auto d = static_cast<Eigen::Index>(mart.output_dim());
  rep.predicted.resize(np, d);
  for (Eigen::Index p = 0; p < np; ++p) {
    const double t = points[static_cast<std::size_t>(p)];
    rep.predicted.row(p) = predicted(t).transpose();
    rep.certificates.push_back(predicted.certificate(t));
  }
  rep.gaps = Eigen::MatrixXd::Zero(np, nn);
  for (Eigen::Index s = 0; s < nn; ++s) {
    Eigen::MatrixXd vals(np, d);
    const auto& g = mart.term(static_cast<std::size_t>(s));
    for (Eigen::Index p = 0; p < np; ++p) {
      vals.row(p) = g(points[static_cast<std::size_t>(p)]).transpose();
      rep.gaps(p, s) = (vals.row(p) - rep.predicted.row(p)).norm();
    }
    rep.values.push_back(std::move(vals));
  }
  for (Eigen::Index p = 0; p < np; ++p) {
    const double last = rep.gaps(p, nn - 1);
    rep.final_gaps.push_back(last);
    const bool trend = last <= std::max(rep.gaps(p, 0), thresholds.pointwise);
    const bool ok = std::isfinite(last) && last <= thresholds.pointwise &&
                    rep.certificates[static_cast<std::size_t>(p)] <= thresholds.certificate;
    rep.trend_ok = rep.trend_ok && trend;
    rep.point_pass.push_back(ok && trend);
    rep.pass = rep.pass && ok && trend;
  }
  return rep;
}

}  // namespace splinemart
