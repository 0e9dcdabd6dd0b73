#include "splinemart/functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splinemart/cantor.hpp"
#include "splinemart/error.hpp"
#include "splinemart/quadrature.hpp"

namespace splinemart {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FunctionSpec

FunctionSpec::FunctionSpec(std::string name, Kind kind, std::size_t dim, Sampler sampler,
                           std::vector<double> breakpoints, int poly_degree, bool continuous)
    : name_(std::move(name)),
      kind_(kind),
      dim_(dim),
      sampler_(std::move(sampler)),
      breaks_(std::move(breakpoints)),
      degree_(poly_degree),
      continuous_(continuous) {
  if (dim_ == 0) throw Error("function dimension must be positive");
  std::erase_if(breaks_, [](double b) { return !(b > 0.0 && b < 1.0); });
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

FunctionSpec FunctionSpec::scalar(std::string name, std::function<double(double)> f,
                                  std::vector<double> breakpoints, int poly_degree,
                                  bool continuous) {
  const Kind kind = poly_degree >= 0 ? Kind::piecewise_polynomial : Kind::closed_form;
  return FunctionSpec(
      std::move(name), kind, 1, [f = std::move(f)](double t, double* out) { out[0] = f(t); },
      std::move(breakpoints), poly_degree, continuous);
}

FunctionSpec FunctionSpec::constant(Eigen::VectorXd value) {
  const auto d = static_cast<std::size_t>(value.size());
  return FunctionSpec(
      "constant", Kind::piecewise_polynomial, d,
      [value](double, double* out) {
        for (Eigen::Index c = 0; c < value.size(); ++c) out[c] = value[c];
      },
      {}, 0, true);
}

FunctionSpec FunctionSpec::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  const int degree = static_cast<int>(coeffs.size()) - 1;
  return scalar(
      "polynomial",
      [coeffs](double t) {
        double v = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * t + *it;
        return v;
      },
      {}, degree, true);
}

FunctionSpec FunctionSpec::from_spline(Spline s, std::string name) {
  const auto& space = s.space();
  std::vector<double> breaks = space.breakpoints();
  const int degree = space.order() - 1;
  const std::size_t d = s.output_dim();
  // Local spaces may not cover [0,1]; their ends are breaks too.
  FunctionSpec f(
      std::move(name), Kind::spline, d,
      [s](double t, double* out) { s.eval(t, {out, s.output_dim()}); }, std::move(breaks),
      degree, false);
  f.spline_ = std::move(s);
  return f;
}

FunctionSpec FunctionSpec::stack(const std::vector<FunctionSpec>& parts, std::string name) {
  if (parts.empty()) throw Error("vector function needs at least one component");
  std::size_t d = 0;
  std::vector<double> breaks;
  int degree = 0;
  bool continuous = true;
  bool all_poly = true;
  for (const auto& p : parts) {
    d += p.dimension();
    breaks.insert(breaks.end(), p.breakpoints().begin(), p.breakpoints().end());
    if (p.poly_degree() < 0) all_poly = false;
    degree = std::max(degree, p.poly_degree());
    continuous = continuous && p.continuous();
  }
  const Kind kind = all_poly ? Kind::piecewise_polynomial : Kind::closed_form;
  return FunctionSpec(
      std::move(name), kind, d,
      [parts](double t, double* out) {
        for (const auto& p : parts) {
          p.eval(t, out);
          out += p.dimension();
        }
      },
      std::move(breaks), all_poly ? degree : -1, continuous);
}

Eigen::VectorXd FunctionSpec::operator()(double t) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
  sampler_(t, v.data());
  return v;
}

double FunctionSpec::scalar_value(double t) const {
  if (dim_ == 1) {
    double v = 0.0;
    sampler_(t, &v);
    return v;
  }
  return (*this)(t)[0];
}

FunctionSpec FunctionSpec::component(std::size_t c) const {
  if (c >= dim_) throw Error("component index out of range");
  if (spline_) {
    return from_spline(spline_->component(c), name_ + "[" + std::to_string(c) + "]");
  }
  const std::size_t d = dim_;
  FunctionSpec f(
      name_ + "[" + std::to_string(c) + "]", kind_, 1,
      [s = sampler_, c, d](double t, double* out) {
        double buf[64];
        std::vector<double> heap;
        double* v = buf;
        if (d > 64) {
          heap.resize(d);
          v = heap.data();
        }
        s(t, v);
        out[0] = v[c];
      },
      breaks_, degree_, continuous_);
  return f;
}

FunctionSpec FunctionSpec::scaled(double factor) const {
  const std::size_t d = dim_;
  return FunctionSpec(
      name_, kind_, d,
      [s = sampler_, factor, d](double t, double* out) {
        s(t, out);
        for (std::size_t c = 0; c < d; ++c) out[c] *= factor;
      },
      breaks_, degree_, continuous_);
}

FunctionSpec cantor_staircase() {
  return FunctionSpec::scalar("cantor-devil-staircase", [](double t) { return cantor::cdf(t); });
}

FunctionSpec bump(double center, double width) {
  if (!(width > 0.0)) throw Error("bump width must be positive");
  const double lo = center - 0.5 * width;
  const double hi = center + 0.5 * width;
  auto shape = [center, width](double t) {
    const double u = 2.0 * (t - center) / width;
    return std::abs(u) >= 1.0 ? 0.0 : (1.0 - u * u) * (1.0 - u * u);
  };
  // Exact integral of the clipped quartic: Gauss with 3 nodes per piece.
  const double a = std::max(lo, 0.0);
  const double b = std::min(hi, 1.0);
  if (!(b > a)) throw Error("bump does not meet [0,1]");
  const double mass = integrate(shape, a, b, 3);
  return FunctionSpec::scalar(
      "bump", [shape, mass](double t) { return shape(t) / mass; }, {lo, hi}, 4, true);
}

// ---------------------------------------------------------------------------
// MeasureSpec

MeasureSpec MeasureSpec::from_density(FunctionSpec f) {
  MeasureSpec m;
  m.density = std::move(f);
  return m;
}

MeasureSpec MeasureSpec::dirac(double x, Eigen::VectorXd weight) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error("atom location must lie in [0,1]");
  MeasureSpec m;
  m.atoms.push_back({x, std::move(weight)});
  return m;
}

MeasureSpec MeasureSpec::cantor_measure(int level, Eigen::VectorXd weight) {
  if (level < 1) throw Error("Cantor level must be at least 1");
  MeasureSpec m;
  m.cantor = CantorPart{level, std::move(weight)};
  return m;
}

std::size_t MeasureSpec::dimension() const {
  std::optional<std::size_t> d;
  auto check = [&d](std::size_t v) {
    if (d && *d != v) throw Error("measure parts have different output dimensions");
    d = v;
  };
  if (density) check(density->dimension());
  for (const auto& a : atoms) check(static_cast<std::size_t>(a.weight.size()));
  if (cantor) check(static_cast<std::size_t>(cantor->weight.size()));
  if (!d) throw Error("empty measure");
  return *d;
}

namespace {

// Integral over [0,1] of a (possibly vector) function, split at its breaks.
Eigen::VectorXd integrate_function(const FunctionSpec& f, std::size_t panels, std::size_t nodes) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.dimension()));
  Eigen::VectorXd v(sum.size());
  const auto& rule = gauss_legendre(nodes);
  for (const auto& [a, b] : split_interval(0.0, 1.0, f.breakpoints())) {
    for_each_node(a, b, rule, panels, [&](double x, double w) {
      f.eval(x, v.data());
      sum += w * v;
    });
  }
  return sum;
}

}  // namespace

Eigen::VectorXd MeasureSpec::total_mass() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  if (density) {
    if (density->poly_degree() >= 0) {
      m += integrate_function(*density, 1, nodes_for_degree(static_cast<std::size_t>(density->poly_degree())));
    } else {
      m += integrate_function(*density, 64, 16);
    }
  }
  for (const auto& a : atoms) m += a.weight;
  if (cantor) m += cantor->weight;
  return m;
}

double MeasureSpec::total_variation() const {
  double tv = 0.0;
  if (density) {
    const auto& f = *density;
    const auto& rule = gauss_legendre(16);
    Eigen::VectorXd v(static_cast<Eigen::Index>(f.dimension()));
    for (const auto& [a, b] : split_interval(0.0, 1.0, f.breakpoints())) {
      for_each_node(a, b, rule, 64, [&](double x, double w) {
        f.eval(x, v.data());
        tv += w * v.norm();
      });
    }
  }
  for (const auto& a : atoms) tv += a.weight.norm();
  if (cantor) tv += cantor->weight.norm();
  return tv;
}

double MeasureSpec::singular_variation(double a, double b) const {
  double v = 0.0;
  for (const auto& at : atoms) {
    if (at.x >= a && at.x <= b) v += at.weight.norm();
  }
  if (cantor) v += cantor->weight.norm() * cantor::measure(a, b);
  return v;
}

double MeasureSpec::singular_distance(double t) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms) d = std::min(d, std::abs(t - a.x));
  if (cantor) d = std::min(d, cantor::distance_to_support(t));
  return d;
}

MeasureSpec MeasureSpec::component(std::size_t c) const {
  MeasureSpec m;
  const auto ci = static_cast<Eigen::Index>(c);
  if (density) m.density = density->component(c);
  for (const auto& a : atoms) m.atoms.push_back({a.x, a.weight.segment(ci, 1)});
  if (cantor) m.cantor = CantorPart{cantor->level, cantor->weight.segment(ci, 1)};
  return m;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

template <class T>
T param(const json& rec, const char* key, T fallback) {
  if (!rec.is_object() || !rec.contains(key)) return fallback;
  try {
    return rec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("parameter '") + key + "': " + e.what());
  }
}

double finite_param(const json& rec, const char* key, double fallback) {
  const double v = param<double>(rec, key, fallback);
  if (!std::isfinite(v)) throw ConfigError(std::string("parameter '") + key + "' must be finite");
  return v;
}

Eigen::VectorXd vector_param(const json& rec, const char* key, double fallback) {
  if (!rec.is_object() || !rec.contains(key)) return Eigen::VectorXd::Constant(1, fallback);
  const json& v = rec.at(key);
  if (v.is_number()) return Eigen::VectorXd::Constant(1, v.get<double>());
  if (v.is_array() && !v.empty()) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(std::string("parameter '") + key + "' must hold numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }
  throw ConfigError(std::string("parameter '") + key + "' must be a number or a non-empty array");
}

std::string record_name(const json& rec, const char* key = "name") {
  if (rec.is_string()) return rec.get<std::string>();
  if (!rec.is_object() || !rec.contains(key) || !rec.at(key).is_string()) {
    throw ConfigError(std::string("record needs a string field '") + key + "'");
  }
  return rec.at(key).get<std::string>();
}

}  // namespace

const std::vector<RegistryEntry>& function_registry() {
  static const std::vector<RegistryEntry> entries = {
      {"sin2pi", "sin(2 pi freq t) * amplitude", {{"freq", "number", "1", "frequency"}, {"amplitude", "number", "1", "scale"}}},
      {"step", "0 for t < at, 1 for t >= at", {{"at", "number", "0.5", "jump location"}}},
      {"indicator", "1 on [lo, hi], 0 elsewhere", {{"lo", "number", "0", "left end"}, {"hi", "number", "0.5", "right end"}}},
      {"abs-centered", "|t - center|", {{"center", "number", "0.5", "kink location"}}},
      {"cantor-devil-staircase", "Cantor function (continuous, singular derivative)", {}},
      {"bump", "quartic bump of unit integral", {{"center", "number", "0.5", "centre"}, {"width", "number", "0.1", "support length"}}},
      {"square", "t^2", {}},
      {"polynomial", "sum_i coeffs[i] t^i", {{"coeffs", "array", "[0,1]", "monomial coefficients"}}},
      {"constant", "constant value (number or vector)", {{"value", "number|array", "1", "value"}}},
      {"exp", "exp(rate t)", {{"rate", "number", "1", "exponent"}}},
      {"vector", "stack of component functions", {{"components", "array", "-", "function records"}}},
      {"spline", "explicit spline record", {{"order", "integer", "-", "order k"}, {"knots", "array", "-", "knot vector"}, {"coeffs", "array", "-", "dim x d coefficients"}}},
  };
  return entries;
}

const std::vector<RegistryEntry>& measure_registry() {
  static const std::vector<RegistryEntry> entries = {
      {"dirac", "point mass weight * delta_at", {{"at", "number", "1/3", "location"}, {"weight", "number|array", "1", "mass"}}},
      {"cantor", "Cantor measure times weight", {{"level", "integer", "8", "minimum recursion depth"}, {"weight", "number|array", "1", "mass"}}},
      {"density", "absolutely continuous part f dlambda", {{"function", "record", "-", "function record"}}},
      {"composite", "density + atoms + cantor record", {{"density", "record", "none", "function record"}, {"atoms", "array", "[]", "{at, weight} records"}, {"cantor", "record", "none", "{level, weight}"}}},
  };
  return entries;
}

const std::vector<RegistryEntry>& knot_family_registry() {
  static const std::vector<RegistryEntry> entries = {
      {"explicit-list", "finite list of interior knots", {{"knots", "array", "-", "values in (0,1)"}}},
      {"uniform-dense", "b-adic enumeration, level by level", {{"base", "integer", "3", "base b >= 2"}}},
      {"dyadic-dense", "1/2, 1/4, 3/4, 1/8, ...", {}},
      {"geometric-to-point", "target -+ d ratio^i", {{"target", "number", "0.5", "accumulation point"}, {"ratio", "number", "0.5", "in (0,1)"}, {"side", "string", "left", "left|right|both"}}},
      {"dense-in-subinterval", "dyadic enumeration of (a,b)", {{"a", "number", "0.25", "left end"}, {"b", "number", "0.75", "right end"}}},
      {"concatenation", "round-robin interleaving of parts", {{"parts", "array", "-", "knot program records"}}},
      {"uniform", "equispaced grid with n interior knots (not nested)", {}},
      {"random", "n seeded uniform random interior knots (not nested)", {}},
      {"mixed", "n/2 equispaced plus n - n/2 seeded random interior knots (not nested)", {}},
  };
  return entries;
}

FunctionSpec make_function(const json& rec) {
  const std::string name = record_name(rec);
  if (name == "sin2pi") {
    const double freq = finite_param(rec, "freq", 1.0);
    const double amp = finite_param(rec, "amplitude", 1.0);
    return FunctionSpec::scalar("sin2pi", [freq, amp](double t) {
      return amp * std::sin(2.0 * std::numbers::pi * freq * t);
    });
  }
  if (name == "step") {
    const double at = finite_param(rec, "at", 0.5);
    return FunctionSpec::scalar("step", [at](double t) { return t >= at ? 1.0 : 0.0; }, {at}, 0, false);
  }
  if (name == "indicator") {
    const double lo = finite_param(rec, "lo", 0.0);
    const double hi = finite_param(rec, "hi", 0.5);
    if (!(hi > lo)) throw ConfigError("indicator needs lo < hi");
    return FunctionSpec::scalar(
        "indicator", [lo, hi](double t) { return (t >= lo && t <= hi) ? 1.0 : 0.0; }, {lo, hi}, 0,
        false);
  }
  if (name == "abs-centered") {
    const double c = finite_param(rec, "center", 0.5);
    return FunctionSpec::scalar("abs-centered", [c](double t) { return std::abs(t - c); }, {c}, 1, true);
  }
  if (name == "cantor-devil-staircase") return cantor_staircase();
  if (name == "bump") return bump(finite_param(rec, "center", 0.5), finite_param(rec, "width", 0.1));
  if (name == "square") return FunctionSpec::scalar("square", [](double t) { return t * t; }, {}, 2, true);
  if (name == "polynomial") {
    auto c = param<std::vector<double>>(rec, "coeffs", {0.0, 1.0});
    return FunctionSpec::polynomial(std::move(c));
  }
  if (name == "constant") return FunctionSpec::constant(vector_param(rec, "value", 1.0));
  if (name == "exp") {
    const double r = finite_param(rec, "rate", 1.0);
    return FunctionSpec::scalar("exp", [r](double t) { return std::exp(r * t); });
  }
  if (name == "vector") {
    if (!rec.contains("components") || !rec.at("components").is_array()) {
      throw ConfigError("vector function needs a 'components' array");
    }
    std::vector<FunctionSpec> parts;
    for (const auto& c : rec.at("components")) parts.push_back(make_function(c));
    return FunctionSpec::stack(parts);
  }
  if (name == "spline") return FunctionSpec::from_spline(spline_from_json(rec));
  throw ConfigError("unknown function '" + name + "' (see `list`)");
}

MeasureSpec make_measure(const json& rec) {
  if (rec.is_object() && !rec.contains("name")) {
    MeasureSpec m;
    if (rec.contains("density")) m.density = make_function(rec.at("density"));
    if (rec.contains("atoms")) {
      for (const auto& a : rec.at("atoms")) {
        const double x = finite_param(a, "at", 1.0 / 3.0);
        if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("atom location must lie in [0,1]");
        m.atoms.push_back({x, vector_param(a, "weight", 1.0)});
      }
    }
    if (rec.contains("cantor")) {
      const auto& c = rec.at("cantor");
      const int level = param<int>(c, "level", 8);
      if (level < 1) throw ConfigError("Cantor level must be at least 1");
      m.cantor = CantorPart{level, vector_param(c, "weight", 1.0)};
    }
    if (!m.density && m.atoms.empty() && !m.cantor) throw ConfigError("measure record is empty");
    (void)m.dimension();
    return m;
  }
  const std::string name = record_name(rec);
  if (name == "dirac") {
    const double x = finite_param(rec, "at", 1.0 / 3.0);
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("atom location must lie in [0,1]");
    return MeasureSpec::dirac(x, vector_param(rec, "weight", 1.0));
  }
  if (name == "cantor") {
    const int level = param<int>(rec, "level", 8);
    if (level < 1) throw ConfigError("Cantor level must be at least 1");
    return MeasureSpec::cantor_measure(level, vector_param(rec, "weight", 1.0));
  }
  if (name == "density") {
    if (!rec.contains("function")) throw ConfigError("density measure needs a 'function'");
    return MeasureSpec::from_density(make_function(rec.at("function")));
  }
  throw ConfigError("unknown measure '" + name + "' (see `list`)");
}

KnotProgram make_program(const json& rec, int order) {
  const std::string fam = record_name(rec, "family");
  try {
    if (fam == "explicit-list") {
      return KnotProgram::explicit_list(order, param<std::vector<double>>(rec, "knots", {}));
    }
    if (fam == "uniform-dense") {
      return KnotProgram::uniform_dense(order, param<unsigned>(rec, "base", 3));
    }
    if (fam == "dyadic-dense" || fam == "dyadic") return KnotProgram::dyadic_dense(order);
    if (fam == "geometric-to-point") {
      const std::string side = param<std::string>(rec, "side", "left");
      Approach a = Approach::left;
      if (side == "right") {
        a = Approach::right;
      } else if (side == "both") {
        a = Approach::both;
      } else if (side != "left") {
        throw ConfigError("side must be left, right or both");
      }
      return KnotProgram::geometric_to_point(order, finite_param(rec, "target", 0.5),
                                             finite_param(rec, "ratio", 0.5), a);
    }
    if (fam == "dense-in-subinterval") {
      return KnotProgram::dense_in_subinterval(order, finite_param(rec, "a", 0.25),
                                               finite_param(rec, "b", 0.75));
    }
    if (fam == "concatenation") {
      if (!rec.contains("parts") || !rec.at("parts").is_array()) {
        throw ConfigError("concatenation needs a 'parts' array");
      }
      std::vector<KnotProgram> parts;
      for (const auto& p : rec.at("parts")) parts.push_back(make_program(p, order));
      return KnotProgram::concatenation(order, std::move(parts));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown knot family '" + fam + "' (see `list`)");
}

json spline_to_json(const Spline& s) {
  json coeffs = json::array();
  const auto& c = s.coefficients();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < c.cols(); ++j) row.push_back(c(i, j));
    coeffs.push_back(row);
  }
  return {{"order", s.space().order()}, {"knots", s.space().knot_vector()}, {"coeffs", coeffs}};
}

Spline spline_from_json(const json& rec) {
  try {
    const int order = rec.at("order").get<int>();
    auto knots = rec.at("knots").get<std::vector<double>>();
    const auto& rows = rec.at("coeffs");
    SplineSpace space(std::move(knots), order);
    if (rows.size() != space.dimension()) throw ConfigError("spline coeffs must have one row per basis function");
    const std::size_t d = rows.empty() ? 1 : (rows[0].is_array() ? rows[0].size() : 1);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].is_array()) {
        if (rows[i].size() != d) throw ConfigError("ragged spline coefficient rows");
        for (std::size_t j = 0; j < d; ++j) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
      } else {
        c(static_cast<Eigen::Index>(i), 0) = rows[i].get<double>();
      }
    }
    return Spline(std::move(space), std::move(c));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spline record: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("spline record: ") + e.what());
  }
}

}  // namespace splinemart
