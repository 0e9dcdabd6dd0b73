#include "splinemart/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "splinemart/cantor.hpp"
#include "splinemart/error.hpp"
#include "splinemart/quadrature.hpp"

namespace splinemart {

namespace {

struct PieceRule {
  const QuadratureRule* rule;
  std::size_t panels;
};

PieceRule rule_for(int degree, std::size_t quad_depth) {
  if (degree >= 0) {
    const auto n = nodes_for_degree(static_cast<std::size_t>(degree));
    return {&gauss_legendre(std::min(n, kMaxGaussNodes)), 1};
  }
  return {&gauss_legendre(kSmoothNodes), std::max<std::size_t>(quad_depth, 1)};
}

std::vector<double> merged_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> m;
  m.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(m));
  m.erase(std::unique(m.begin(), m.end()), m.end());
  return m;
}

void add_basis_row(Eigen::MatrixXd& out, const BasisValues& b, double w, const double* v) {
  for (std::size_t r = 0; r < b.count; ++r) {
    const auto row = static_cast<Eigen::Index>(b.first + r);
    const double s = w * b.values[r];
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(row, c) += s * v[c];
  }
}

double choose(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Moments and projections

Eigen::MatrixXd basis_moments(const SplineSpace& space, const FunctionSpec& f,
                              std::size_t quad_depth) {
  const auto d = static_cast<Eigen::Index>(f.dimension());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.dimension()), d);
  const int degree = f.poly_degree() >= 0 ? f.poly_degree() + space.order() - 1 : -1;
  const auto pr = rule_for(degree, quad_depth);
  Eigen::VectorXd v(d);
  const auto& spans = space.spans();
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const double lo = spans[s].lo;
    for (const auto& [a, b] : split_interval(lo, spans[s].hi, f.breakpoints())) {
      for_each_offset(lo, a - lo, b - lo, *pr.rule, pr.panels, [&](double x, double off, double w) {
        f.eval(x, v.data());
        add_basis_row(out, eval_basis_in_span(space, s, off), w, v.data());
      });
    }
  }
  return out;
}

Eigen::MatrixXd basis_moments(const SplineSpace& space, const MeasureSpec& nu,
                              std::size_t quad_depth) {
  const auto d = static_cast<Eigen::Index>(nu.dimension());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.dimension()), d);
  if (nu.density) out += basis_moments(space, *nu.density, quad_depth);
  for (const auto& atom : nu.atoms) {
    add_basis_row(out, eval_basis(space, atom.x), 1.0, atom.weight.data());
  }
  if (nu.cantor) {
    const auto& c = *nu.cantor;
    const auto degree = static_cast<std::size_t>(space.order() - 1);
    cantor::for_each_node(space.breakpoints(), degree, c.level, [&](double x, double w) {
      add_basis_row(out, eval_basis(space, x), w, c.weight.data());
    });
  }
  return out;
}

Spline project_function(const DualBasis& duals, const FunctionSpec& f, std::size_t quad_depth) {
  return Spline(duals.space(), duals.solve(basis_moments(duals.space(), f, quad_depth)));
}

Spline project_function(const SplineSpace& space, const FunctionSpec& f, std::size_t quad_depth) {
  return project_function(DualBasis(space), f, quad_depth);
}

Spline project_measure(const DualBasis& duals, const MeasureSpec& nu, std::size_t quad_depth) {
  return Spline(duals.space(), duals.solve(basis_moments(duals.space(), nu, quad_depth)));
}

Spline project_measure(const SplineSpace& space, const MeasureSpec& nu, std::size_t quad_depth) {
  return project_measure(DualBasis(space), nu, quad_depth);
}

Eigen::VectorXd integrate_product(const FunctionSpec& g, const FunctionSpec& f,
                                  std::size_t quad_depth) {
  if (f.dimension() != 1) throw Error("integrate_product expects a scalar second factor");
  const auto breaks = merged_breaks(g.breakpoints(), f.breakpoints());
  const int degree =
      (g.poly_degree() >= 0 && f.poly_degree() >= 0) ? g.poly_degree() + f.poly_degree() : -1;
  const auto pr = rule_for(degree, quad_depth);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.dimension()));
  Eigen::VectorXd v(sum.size());
  for (const auto& [a, b] : split_interval(0.0, 1.0, breaks)) {
    for_each_node(a, b, *pr.rule, pr.panels, [&](double x, double w) {
      g.eval(x, v.data());
      sum += (w * f.scalar_value(x)) * v;
    });
  }
  return sum;
}

Eigen::VectorXd self_adjoint_defects(const DualBasis& duals, const FunctionSpec& g,
                                     const FunctionSpec& f, std::size_t quad_depth) {
  const auto pg = FunctionSpec::from_spline(project_function(duals, g, quad_depth));
  const auto pf = FunctionSpec::from_spline(project_function(duals, f, quad_depth));
  return integrate_product(pg, f, quad_depth) - integrate_product(g, pf, quad_depth);
}

double check_self_adjoint(const DualBasis& duals, const FunctionSpec& g, const FunctionSpec& f,
                          std::size_t quad_depth) {
  return self_adjoint_defects(duals, g, f, quad_depth).norm();
}

// ---------------------------------------------------------------------------
// Norms

double l1_norm(const Spline& s) {
  const auto& space = s.space();
  const int k = space.order();
  const auto& rule = gauss_legendre(nodes_for_degree(static_cast<std::size_t>(k - 1)));
  double total = 0.0;
  if (s.output_dim() != 1) {
    const auto& fine = gauss_legendre(16);
    for (const auto& span : space.spans()) {
      for_each_node(span.lo, span.hi, fine, 8, [&](double x, double w) { total += w * s(x).norm(); });
    }
    return total;
  }
  const int samples = 8 * k + 1;
  for (const auto& span : space.spans()) {
    auto p = [&](double x) { return s.eval_component(x, 0); };
    // Cut the span at sign changes so |p| is a polynomial on every piece.
    std::vector<double> cuts{span.lo};
    double x0 = span.lo;
    double y0 = p(span.lo);
    for (int i = 1; i < samples; ++i) {
      const double x1 = (i == samples - 1) ? span.hi : span.lo + span.length() * i / (samples - 1);
      // Evaluate just inside the span at its right end (right-continuity).
      const double y1 = p(i == samples - 1 ? std::nextafter(span.hi, span.lo) : x1);
      if ((y0 < 0.0 && y1 > 0.0) || (y0 > 0.0 && y1 < 0.0)) {
        double a = x0;
        double b = x1;
        double fa = y0;
        for (int it = 0; it < 80 && b - a > 0.0; ++it) {
          const double m = 0.5 * (a + b);
          if (m <= a || m >= b) break;
          const double fm = p(m);
          if ((fa < 0.0) == (fm < 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        cuts.push_back(0.5 * (a + b));
      }
      x0 = x1;
      y0 = y1;
    }
    cuts.push_back(span.hi);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      double piece = 0.0;
      for_each_node(cuts[c], cuts[c + 1], rule, 1, [&](double x, double w) { piece += w * p(x); });
      total += std::abs(piece);
    }
  }
  return total;
}

double l1_norm(const FunctionSpec& f, std::size_t panels) {
  double total = 0.0;
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.dimension()));
  const auto& rule = gauss_legendre(16);
  for (const auto& [a, b] : split_interval(0.0, 1.0, f.breakpoints())) {
    for_each_node(a, b, rule, panels, [&](double x, double w) {
      f.eval(x, v.data());
      total += w * v.norm();
    });
  }
  return total;
}

std::vector<double> sup_lattice(const SplineSpace& space) {
  const int m = 4 * space.order();
  std::vector<double> pts;
  pts.reserve(space.spans().size() * static_cast<std::size_t>(m + 1) + 1);
  for (const auto& span : space.spans()) {
    pts.push_back(span.lo);
    for (int l = 0; l < m; ++l) {
      const double c = std::cos(std::numbers::pi * (2.0 * l + 1.0) / (2.0 * m));
      pts.push_back(span.lo + 0.5 * (1.0 - c) * span.length());
    }
  }
  pts.push_back(space.domain_hi());
  return pts;
}

double sup_norm(const Spline& s) {
  double m = 0.0;
  for (double t : sup_lattice(s.space())) m = std::max(m, s(t).norm());
  return m;
}

double sup_error(const FunctionSpec& f, const Spline& s) {
  double m = 0.0;
  for (double t : sup_lattice(s.space())) m = std::max(m, (f(t) - s(t)).norm());
  return m;
}

// ---------------------------------------------------------------------------
// Shadrin probe

ShadrinResult shadrin_probe(const DualBasis& duals, double bump_width) {
  if (!(bump_width > 0.0 && bump_width < 1.0)) throw Error("bump width must lie in (0,1)");
  const auto& space = duals.space();
  std::vector<double> centers;
  for (const auto& span : space.spans()) {
    for (double f : {0.0, 0.25, 0.5, 0.75}) centers.push_back(span.lo + f * span.length());
  }
  centers.push_back(space.domain_hi());
  const double lo = 0.5 * bump_width;
  const double hi = 1.0 - 0.5 * bump_width;
  for (double& c : centers) c = std::clamp(c, lo, hi);
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());

  ShadrinResult res;
  res.centers = centers.size();
  for (double c : centers) {
    const auto b = bump(c, bump_width);
    const double ratio = l1_norm(project_function(duals, b)) / 1.0;
    if (ratio > res.ratio) {
      res.ratio = ratio;
      res.worst_center = c;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Maximal function

MaximalFunction::MaximalFunction(const FunctionSpec& g, std::size_t cells)
    : g_(g), cells_(std::max<std::size_t>(cells, 1)), table_(cells_ + 1, 0.0) {
  for (std::size_t i = 0; i < cells_; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(cells_);
    const double b = static_cast<double>(i + 1) / static_cast<double>(cells_);
    table_[i + 1] = table_[i] + integral(a, b);
  }
}

double MaximalFunction::integral(double a, double b) const {
  if (!(b > a)) return 0.0;
  double s = 0.0;
  Eigen::VectorXd v(static_cast<Eigen::Index>(g_.dimension()));
  const auto& rule = gauss_legendre(8);
  for (const auto& [lo, hi] : split_interval(a, b, g_.breakpoints())) {
    for_each_node(lo, hi, rule, 1, [&](double x, double w) {
      g_.eval(x, v.data());
      s += w * v.norm();
    });
  }
  return s;
}

double MaximalFunction::cumulative(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  const auto i = std::min(cells_ - 1, static_cast<std::size_t>(x * static_cast<double>(cells_)));
  const double a = static_cast<double>(i) / static_cast<double>(cells_);
  return table_[i] + integral(a, x);
}

double MaximalFunction::average(double a, double b) const {
  return (cumulative(b) - cumulative(a)) / (b - a);
}

double MaximalFunction::operator()(double t, std::span<const double> scales,
                                   std::size_t placements) const {
  double best = 0.0;
  const double ct = cumulative(t);
  for (double len : scales) {
    if (!(len > 0.0) || len > 1.0) continue;
    const double a_lo = std::max(0.0, t - len);
    const double a_hi = std::min(t, 1.0 - len);
    if (a_lo > a_hi) continue;
    const std::size_t steps = (a_hi > a_lo) ? std::max<std::size_t>(placements, 2) : 1;
    for (std::size_t p = 0; p < steps; ++p) {
      const double a =
          steps == 1 ? a_lo : a_lo + (a_hi - a_lo) * static_cast<double>(p) / static_cast<double>(steps - 1);
      const double b = a + len;
      const double ca = (a == t) ? ct : cumulative(a);
      const double cb = (b == t) ? ct : cumulative(b);
      best = std::max(best, (cb - ca) / len);
    }
  }
  return best;
}

std::vector<double> default_scales(std::size_t count, double min_length) {
  std::vector<double> s(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    s[i] = std::pow(min_length, e);
  }
  return s;
}

double maximal_function(const FunctionSpec& g, double t, std::span<const double> scales) {
  return MaximalFunction(g)(t, scales);
}

double weak_type_ratio(const FunctionSpec& g, std::span<const double> levels,
                       std::span<const double> scales, std::size_t lattice) {
  const MaximalFunction mf(g);
  std::vector<double> m(lattice);
  for (std::size_t i = 0; i < lattice; ++i) {
    m[i] = mf((static_cast<double>(i) + 0.5) / static_cast<double>(lattice), scales);
  }
  double worst = 0.0;
  for (double u : levels) {
    const auto count = std::count_if(m.begin(), m.end(), [u](double v) { return v > u; });
    const double measure = static_cast<double>(count) / static_cast<double>(lattice);
    worst = std::max(worst, u * measure / mf.l1_norm());
  }
  return worst;
}

MaximalReport check_maximal_inequality(const std::vector<SplineSpace>& spaces,
                                       const FunctionSpec& g, std::span<const double> points,
                                       std::span<const double> scales, std::size_t quad_depth) {
  MaximalReport rep;
  rep.points.assign(points.begin(), points.end());
  const auto np = static_cast<Eigen::Index>(points.size());
  const auto ns = static_cast<Eigen::Index>(spaces.size());
  rep.values = Eigen::MatrixXd::Zero(np, ns);
  rep.ratios = Eigen::MatrixXd::Zero(np, ns);
  const MaximalFunction mf(g);
  for (double t : points) rep.maximal.push_back(mf(t, scales));
  for (Eigen::Index s = 0; s < ns; ++s) {
    const auto& space = spaces[static_cast<std::size_t>(s)];
    rep.dims.push_back(space.dimension());
    const auto pg = project_function(space, g, quad_depth);
    double worst = 0.0;
    for (Eigen::Index p = 0; p < np; ++p) {
      const double v = pg(points[static_cast<std::size_t>(p)]).norm();
      const double m = rep.maximal[static_cast<std::size_t>(p)];
      rep.values(p, s) = v;
      double r = 0.0;
      if (m > 0.0) {
        r = v / m;
      } else if (v > 0.0) {
        r = std::numeric_limits<double>::infinity();
      }
      rep.ratios(p, s) = r;
      worst = std::max(worst, r);
    }
    rep.max_ratio_by_space.push_back(worst);
    rep.max_ratio = std::max(rep.max_ratio, worst);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Smoothness and Jackson

double modulus_of_smoothness(const FunctionSpec& f, int k, double delta, std::size_t h_steps,
                             std::size_t t_steps) {
  if (k < 1) throw Error("modulus order must be positive");
  if (!(delta >= 0.0) || delta * k > 1.0 + 1e-12) throw Error("modulus needs 0 <= delta <= 1/k");
  std::vector<double> binom(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j <= k; ++j) {
    binom[static_cast<std::size_t>(j)] = ((k - j) % 2 == 0 ? 1.0 : -1.0) * choose(k, j);
  }
  const auto d = static_cast<Eigen::Index>(f.dimension());
  Eigen::VectorXd acc(d);
  Eigen::VectorXd v(d);
  double best = 0.0;
  for (std::size_t hi = 1; hi <= h_steps; ++hi) {
    const double h = delta * static_cast<double>(hi) / static_cast<double>(h_steps);
    const double span = std::max(0.0, 1.0 - k * h);
    for (std::size_t ti = 0; ti <= t_steps; ++ti) {
      const double t = span * static_cast<double>(ti) / static_cast<double>(t_steps);
      acc.setZero();
      for (int j = 0; j <= k; ++j) {
        f.eval(std::min(1.0, t + j * h), v.data());
        acc += binom[static_cast<std::size_t>(j)] * v;
      }
      best = std::max(best, acc.norm());
    }
  }
  return best;
}

std::vector<JacksonRow> jackson_check(const std::vector<SplineSpace>& spaces,
                                      const FunctionSpec& f, std::size_t quad_depth) {
  std::vector<JacksonRow> rows;
  for (const auto& space : spaces) {
    JacksonRow r;
    r.dim = space.dimension();
    r.mesh = mesh_width(space.knots());
    const int k = space.order();
    const auto pf = project_function(space, f, quad_depth);
    r.error = sup_error(f, pf);
    r.omega = modulus_of_smoothness(f, k, std::min(r.mesh, 1.0 / k));
    r.exact = r.omega < 1e-13;
    r.ratio = r.exact ? 0.0 : r.error / r.omega;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace splinemart
