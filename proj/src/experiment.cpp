#include "splinemart/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "splinemart/convergence.hpp"
#include "splinemart/error.hpp"
#include "splinemart/functions.hpp"
#include "splinemart/gram.hpp"
#include "splinemart/knots.hpp"
#include "splinemart/projection.hpp"
#include "splinemart/quadrature.hpp"

namespace splinemart {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

const std::vector<std::string> kGridOnly = {"uniform", "random", "mixed"};

bool is_grid_family(const std::string& fam) {
  return std::find(kGridOnly.begin(), kGridOnly.end(), fam) != kGridOnly.end();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::string ExperimentConfig::locate(const std::string& key, const std::string& message) const {
  std::size_t line = 1;
  const auto pos = source.find("\"" + key + "\"");
  if (pos != std::string::npos) line = line_of_offset(source, pos);
  return origin + ":" + std::to_string(line) + ": " + message;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "gram-decay", "project",        "jackson",  "maximal",        "tower-check",
      "shadrin-probe", "singular-decay", "converge", "limit-construct"};
  return names;
}

namespace {

[[noreturn]] void fail_at(const ExperimentConfig& c, const std::string& key, const std::string& msg) {
  throw ConfigError(c.locate(key, msg));
}

std::vector<std::size_t> parse_schedule(const ExperimentConfig& c, const std::string& key) {
  const json& s = c.record.at(key);
  std::vector<std::size_t> out;
  auto as_count = [&](const json& v) -> std::size_t {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail_at(c, key, "schedule entries must be non-negative integers");
    return v.get<std::size_t>();
  };
  if (s.is_array()) {
    for (const auto& v : s) out.push_back(as_count(v));
  } else if (s.is_object() && s.contains("dyadic")) {
    const auto& r = s.at("dyadic");
    if (!r.is_array() || r.size() != 2) fail_at(c, key, "\"dyadic\" expects [m_lo, m_hi]");
    const auto lo = as_count(r[0]);
    const auto hi = as_count(r[1]);
    if (hi > 30) fail_at(c, key, "dyadic exponent too large");
    for (std::size_t m = lo; m <= hi; ++m) out.push_back((std::size_t{1} << m) - 1);
  } else if (s.is_object() && s.contains("start") && s.contains("stop")) {
    const auto start = as_count(s.at("start"));
    const auto stop = as_count(s.at("stop"));
    const double factor = s.value("factor", 2.0);
    if (!(factor > 1.0) || start == 0) fail_at(c, key, "geometric schedule needs start > 0 and factor > 1");
    for (double n = static_cast<double>(start); n <= static_cast<double>(stop) + 0.5; n *= factor) {
      out.push_back(static_cast<std::size_t>(std::llround(n)));
    }
  } else {
    fail_at(c, key, "schedule must be an array of integers or a {dyadic|start/stop} record");
  }
  if (out.empty()) fail_at(c, key, "schedule must not be empty");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) fail_at(c, key, "schedule must be strictly increasing");
  }
  return out;
}

json knots_record(const ExperimentConfig& c) {
  if (c.record.contains("knots")) {
    const auto& k = c.record.at("knots");
    if (k.is_string()) return json{{"family", k}};
    return k;
  }
  if (c.record.contains("family")) return c.record;
  return json{{"family", "dyadic-dense"}};
}

std::string knots_key(const ExperimentConfig& c) {
  return c.record.contains("knots") ? "knots" : "family";
}

std::string family_of(const ExperimentConfig& c) {
  const json rec = knots_record(c);
  if (!rec.is_object() || !rec.contains("family") || !rec.at("family").is_string()) {
    fail_at(c, knots_key(c), "knot record needs a string \"family\"");
  }
  return rec.at("family").get<std::string>();
}

std::optional<KnotProgram> program_of(const ExperimentConfig& c) {
  const std::string fam = family_of(c);
  if (is_grid_family(fam)) return std::nullopt;
  try {
    return make_program(knots_record(c), c.order);
  } catch (const ConfigError& e) {
    fail_at(c, knots_key(c), e.what());
  }
}

KnotProgram nested_program(const ExperimentConfig& c) {
  auto p = program_of(c);
  if (!p) fail_at(c, knots_key(c), "this experiment needs a nested knot program, not the grid family '" + family_of(c) + "'");
  return *p;
}

double tolerance(const ExperimentConfig& c, const std::string& name, double fallback) {
  if (!c.record.contains("tolerances")) return fallback;
  const auto& t = c.record.at("tolerances");
  if (!t.contains(name)) return fallback;
  return t.at(name).get<double>();
}

FunctionSpec function_at(const ExperimentConfig& c, const json& rec, const std::string& key) {
  try {
    return make_function(rec);
  } catch (const ConfigError& e) {
    fail_at(c, key, e.what());
  } catch (const json::exception& e) {
    fail_at(c, key, e.what());
  }
}

FunctionSpec function_of(const ExperimentConfig& c) {
  if (!c.record.contains("function")) fail_at(c, "experiment", "this experiment needs a \"function\"");
  return function_at(c, c.record.at("function"), "function");
}

std::vector<FunctionSpec> functions_of(const ExperimentConfig& c) {
  std::vector<FunctionSpec> out;
  if (c.record.contains("functions")) {
    const auto& arr = c.record.at("functions");
    if (!arr.is_array() || arr.empty()) fail_at(c, "functions", "\"functions\" must be a non-empty array");
    for (const auto& f : arr) out.push_back(function_at(c, f, "functions"));
    return out;
  }
  out.push_back(function_of(c));
  return out;
}

MeasureSpec measure_of(const ExperimentConfig& c) {
  if (!c.record.contains("measure")) fail_at(c, "experiment", "this experiment needs a \"measure\"");
  try {
    return make_measure(c.record.at("measure"));
  } catch (const ConfigError& e) {
    fail_at(c, "measure", e.what());
  } catch (const json::exception& e) {
    fail_at(c, "measure", e.what());
  }
}

MartingaleSource source_of(const ExperimentConfig& c) {
  const bool f = c.record.contains("function");
  const bool m = c.record.contains("measure");
  if (f == m) fail_at(c, "experiment", "give exactly one of \"function\" or \"measure\" as the source");
  if (f) return function_of(c);
  return measure_of(c);
}

std::size_t quad_depth_of(const ExperimentConfig& c) {
  return c.record.value("quad_depth", kDefaultQuadDepth);
}

void validate_types(const ExperimentConfig& c) {
  const json& r = c.record;
  auto want_positive = [&](const char* key, const json& v) {
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
      fail_at(c, key, std::string("\"") + key + "\" must be a positive number");
    }
  };
  if (r.contains("tolerances")) {
    const auto& t = r.at("tolerances");
    if (!t.is_object()) fail_at(c, "tolerances", "\"tolerances\" must be an object");
    for (const auto& [name, v] : t.items()) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) fail_at(c, name, "tolerance \"" + name + "\" must be positive");
    }
  }
  if (r.contains("quad_depth")) {
    const auto& q = r.at("quad_depth");
    if (!q.is_number_integer() || q.get<long long>() < 1 || q.get<long long>() > 64) {
      fail_at(c, "quad_depth", "\"quad_depth\" must be an integer in [1, 64]");
    }
  }
  if (r.contains("grids")) {
    const auto& g = r.at("grids");
    if (!g.is_number_integer() || g.get<long long>() < 1) fail_at(c, "grids", "\"grids\" must be a positive integer");
  }
  if (r.contains("width")) want_positive("width", r.at("width"));
  if (r.contains("certify") && !r.at("certify").is_boolean()) fail_at(c, "certify", "\"certify\" must be true or false");
  if (r.contains("component")) {
    const auto& g = r.at("component");
    if (!g.is_number_integer() || g.get<long long>() < 0) fail_at(c, "component", "\"component\" must be a non-negative integer");
  }
  if (r.contains("points")) {
    const auto& p = r.at("points");
    if (p.is_array()) {
      if (p.empty()) fail_at(c, "points", "\"points\" must not be empty");
      for (const auto& v : p) {
        if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
          fail_at(c, "points", "sample points must be numbers in [0,1]");
        }
      }
    } else if (p.is_object()) {
      if (p.contains("count") && (!p.at("count").is_number_integer() || p.at("count").get<long long>() < 1)) {
        fail_at(c, "count", "\"count\" must be a positive integer");
      }
      if (p.contains("margin") && (!p.at("margin").is_number() || p.at("margin").get<double>() < 0.0)) {
        fail_at(c, "margin", "\"margin\" must be non-negative");
      }
      const double lo = p.value("lo", 0.0);
      const double hi = p.value("hi", 1.0);
      if (!(0.0 <= lo && lo < hi && hi <= 1.0)) fail_at(c, "points", "point region must satisfy 0 <= lo < hi <= 1");
    } else {
      fail_at(c, "points", "\"points\" must be an array or a {count, margin, lo, hi} record");
    }
  }
  if (r.contains("limit")) {
    const auto& l = r.at("limit");
    if (!l.is_object()) fail_at(c, "limit", "\"limit\" must be an object");
    if (l.contains("tol")) want_positive("tol", l.at("tol"));
    if (l.contains("budget") && (!l.at("budget").is_number_integer() || l.at("budget").get<long long>() < 1)) {
      fail_at(c, "budget", "\"budget\" must be a positive integer");
    }
  }
}

// Builds every object once so that errors surface before anything is written.
void validate_semantics(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  const std::string fam = family_of(c);
  const auto program = program_of(c);
  if (program && !c.schedule.empty() && c.schedule.back() > program->capacity()) {
    fail_at(c, c.record.contains("n_schedule") ? "n_schedule" : "schedule",
            "schedule exceeds the capacity (" + std::to_string(program->capacity()) + ") of the knot program");
  }
  if (e == "project" || e == "jackson") (void)function_of(c);
  if (e == "maximal") (void)functions_of(c);
  if (e == "tower-check" || e == "converge") {
    (void)nested_program(c);
    (void)source_of(c);
  }
  if (e == "singular-decay") {
    (void)nested_program(c);
    const auto m = measure_of(c);
    if (m.density) fail_at(c, "measure", "singular-decay needs a purely singular measure (atoms or cantor)");
  }
  if (e == "limit-construct") (void)nested_program(c);
  if (e == "project" && c.record.contains("partner")) {
    const auto p = function_at(c, c.record.at("partner"), "partner");
    if (p.dimension() != 1) fail_at(c, "partner", "partner function must be scalar");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  c.source = text;
  c.origin = origin;
  try {
    c.record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON: " + e.what());
  }
  if (!c.record.is_object()) throw ConfigError(origin + ":1: config must be a JSON object");
  try {
    if (!c.record.contains("experiment") || !c.record.at("experiment").is_string()) {
      throw ConfigError(origin + ":1: missing string field \"experiment\"");
    }
    c.experiment = c.record.at("experiment").get<std::string>();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
      fail_at(c, "experiment", "unknown experiment '" + c.experiment + "' (see `list`)");
    }
    for (const char* key : {"k", "order"}) {
      if (!c.record.contains(key)) continue;
      const auto& v = c.record.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 10) {
        fail_at(c, key, "spline order must be an integer in [1, 10]");
      }
      c.order = v.get<int>();
    }
    const char* skey = c.record.contains("n_schedule") ? "n_schedule" : "schedule";
    if (c.record.contains(skey)) {
      c.schedule = parse_schedule(c, skey);
    } else if (c.experiment != "limit-construct") {
      fail_at(c, "experiment", "missing \"n_schedule\"");
    }
    if (c.record.contains("seed")) {
      const auto& s = c.record.at("seed");
      if (!s.is_number_unsigned()) fail_at(c, "seed", "\"seed\" must be a non-negative integer");
      c.seed = s.get<std::uint64_t>();
    }
    if (c.record.contains("out")) {
      if (!c.record.at("out").is_string()) fail_at(c, "out", "\"out\" must be a string");
      c.out_dir = c.record.at("out").get<std::string>();
    }
    validate_types(c);
    validate_semantics(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(origin + ":1: " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":0: cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_seed_override(ExperimentConfig& config, std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) {
    config.seed = *cli_seed;
    return;
  }
  if (const char* env = std::getenv("SPLINEMART_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') throw ConfigError("SPLINEMART_SEED must be a non-negative integer");
    config.seed = v;
  }
}

// ---------------------------------------------------------------------------
// Runner helpers

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string flag(bool b) { return b ? "1" : "0"; }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Checks {
  json record = json::object();
  bool pass = true;

  void add(const std::string& name, bool ok, double value, double threshold) {
    record[name] = {{"pass", ok}, {"value", finite_or_null(value)}, {"threshold", finite_or_null(threshold)}};
    pass = pass && ok;
  }
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

// n interior knots for the non-nested grid families, or the first n knots of a program.
Grid make_grid(const ExperimentConfig& c, const std::optional<KnotProgram>& program,
               std::size_t n, std::size_t replica) {
  if (program) return realize(*program, n);
  const std::string fam = family_of(c);
  if (fam == "uniform") return Grid::uniform(c.order, n + 1);
  auto rng = make_rng(c.seed, n, replica);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x;
  const std::size_t regular = fam == "mixed" ? n / 2 : 0;
  for (std::size_t i = 1; i <= regular; ++i) x.push_back(static_cast<double>(i) / static_cast<double>(regular + 1));
  while (x.size() < n) {
    const double t = u(rng);
    if (t > 0.0 && t < 1.0) x.push_back(t);
  }
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  return Grid::from_interior(std::move(x), c.order);
}

std::vector<SplineSpace> schedule_spaces(const ExperimentConfig& c) {
  const auto program = program_of(c);
  std::vector<SplineSpace> out;
  for (std::size_t n : c.schedule) out.emplace_back(make_grid(c, program, n, 0));
  return out;
}

/// Explicit points are checked against the margin; a {count, margin} record
/// is sampled with the run seed, rejecting points closer than margin.
std::vector<double> sample_points(const ExperimentConfig& c, const std::function<double(double)>& distance,
                                  std::size_t default_count, double default_margin) {
  std::vector<double> pts;
  if (c.record.contains("points") && c.record.at("points").is_array()) {
    const double margin = tolerance(c, "margin", default_margin);
    for (const auto& v : c.record.at("points")) {
      const double t = v.get<double>();
      if (distance(t) < margin - 1e-12) {
        fail_at(c, "points", "sample point " + num(t) + " is closer than " + num(margin) + " to the excluded set");
      }
      pts.push_back(t);
    }
    return pts;
  }
  json p = c.record.value("points", json::object());
  const auto count = p.value("count", default_count);
  const double margin = p.value("margin", default_margin);
  const double lo = p.value("lo", 0.0);
  const double hi = p.value("hi", 1.0);
  auto rng = make_rng(c.seed, 0x706f696e7473ULL);
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t attempt = 0; pts.size() < count; ++attempt) {
    if (attempt > 200000) fail_at(c, "points", "cannot place sample points at the requested margin");
    const double t = u(rng);
    if (distance(t) >= margin) pts.push_back(t);
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

std::vector<double> lattice_points(const ExperimentConfig& c, std::size_t count) {
  if (c.record.contains("points")) return sample_points(c, [](double) { return kInf; }, count, 0.0);
  std::vector<double> pts;
  for (std::size_t i = 0; i < count; ++i) pts.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(count));
  return pts;
}

// max over earlier entries (first half) against the last value.
bool no_upward_trend(const std::vector<double>& v, double slack) {
  if (v.size() < 2) return true;
  const std::size_t half = std::max<std::size_t>(1, v.size() / 2);
  const double ref = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half));
  return v.back() <= ref * (1.0 + slack) + 1e-12;
}

// ---------------------------------------------------------------------------
// Experiments

void gram_decay(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto program = program_of(c);
  const std::string fam = family_of(c);
  const std::size_t replicas = program || fam == "uniform" ? 1 : c.record.value("grids", std::size_t{1});
  r.columns = {"k", "n", "grid_family", "replica", "dim", "q_hat", "C_hat", "max_residual", "C_common"};
  struct Row {
    std::size_t n, rep;
    DualBasis duals;
    DecayFit fit;
  };
  std::vector<Row> rows;
  for (std::size_t n : c.schedule) {
    for (std::size_t rep = 0; rep < replicas; ++rep) {
      DualBasis d{SplineSpace(make_grid(c, program, n, rep))};
      auto fit = fit_decay(d);
      rows.push_back({n, rep, std::move(d), std::move(fit)});
    }
  }
  double qmin = kInf, qmax = 0.0;
  for (const auto& row : rows) {
    qmin = std::min(qmin, row.fit.q_hat);
    qmax = std::max(qmax, row.fit.q_hat);
  }
  double C_common = 0.0;
  json per_row = json::array();
  for (const auto& row : rows) {
    const double Cc = decay_constant(row.duals, qmax);
    C_common = std::max(C_common, Cc);
    r.rows.push_back({num(static_cast<std::size_t>(c.order)), num(row.n), fam, num(row.rep),
                      num(row.duals.dimension()), num(row.fit.q_hat), num(row.fit.C_hat),
                      num(row.fit.max_residual()), num(Cc)});
    per_row.push_back({{"n", row.n}, {"replica", row.rep}, {"q_hat", row.fit.q_hat}, {"C_hat", row.fit.C_hat}});
    if (row.rep == 0) {
      auto& plot = r.plotdata["decay_n" + std::to_string(row.n)];
      for (std::size_t m = 0; m < row.fit.offset_max.size(); ++m) {
        if (row.fit.offset_max[m] < kDecayNoiseFloor) break;
        plot.emplace_back(static_cast<double>(m), row.fit.offset_max[m]);
      }
    }
  }
  checks.add("q_below_one", qmax < 1.0, qmax, 1.0);
  const double spread_tol = tolerance(c, "spread", 0.1);
  checks.add("q_spread", qmax - qmin <= spread_tol, qmax - qmin, spread_tol);
  if (c.order == 2 && fam == "uniform") {
    const double oracle = 2.0 - std::sqrt(3.0);
    const double dev = std::max(std::abs(qmax - oracle), std::abs(qmin - oracle));
    const double tol = tolerance(c, "q_oracle", 0.02);
    checks.add("q_toeplitz_oracle", dev <= tol, dev, tol);
  }
  r.summary["fits"] = per_row;
  r.summary["q_min"] = qmin;
  r.summary["q_max"] = qmax;
  r.summary["q_common"] = qmax;
  r.summary["C_common"] = C_common;
}

void project(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto f = function_of(c);
  const auto partner = c.record.contains("partner") ? function_at(c, c.record.at("partner"), "partner")
                                                    : make_function(json{{"name", "sin2pi"}, {"freq", 3}});
  const auto depth = quad_depth_of(c);
  r.columns = {"n", "dim", "mesh", "sup_error", "l1_norm", "idempotency_defect", "self_adjoint_defect"};
  double idem = 0.0, adj = 0.0, last_err = 0.0;
  const auto spaces = schedule_spaces(c);
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const auto& space = spaces[i];
    const DualBasis d(space);
    const Spline s = project_function(d, f, depth);
    const Spline s2 = project_function(d, FunctionSpec::from_spline(s), depth);
    const double scale = std::max(1.0, s.coefficients().cwiseAbs().maxCoeff());
    const double di = (s2.coefficients() - s.coefficients()).cwiseAbs().maxCoeff() / scale;
    const double da = check_self_adjoint(d, f, partner, depth);
    const double err = sup_error(f, s);
    const double mesh = mesh_width(space.knots());
    idem = std::max(idem, di);
    adj = std::max(adj, da);
    last_err = err;
    r.rows.push_back({num(c.schedule[i]), num(space.dimension()), num(mesh), num(err),
                      num(l1_norm(s)), num(di), num(da)});
    r.plotdata["error"].emplace_back(mesh, err);
  }
  const double ti = tolerance(c, "idempotency", 1e-10);
  const double ta = tolerance(c, "self_adjoint", 1e-9);
  checks.add("idempotency", idem <= ti, idem, ti);
  checks.add("self_adjoint", adj <= ta, adj, ta);
  if (c.record.contains("tolerances") && c.record.at("tolerances").contains("max_error")) {
    const double te = tolerance(c, "max_error", kInf);
    checks.add("final_sup_error", last_err <= te, last_err, te);
  }
}

void jackson(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto f = function_of(c);
  const auto rows = jackson_check(schedule_spaces(c), f, quad_depth_of(c));
  r.columns = {"n", "dim", "mesh", "error", "omega", "ratio", "exact"};
  double rmin = kInf, rmax = 0.0, exact_err = 0.0;
  bool any_exact = false;
  json ratios = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    r.rows.push_back({num(c.schedule[i]), num(row.dim), num(row.mesh), num(row.error), num(row.omega),
                      num(row.ratio), flag(row.exact)});
    r.plotdata["error"].emplace_back(row.mesh, row.error);
    if (row.exact) {
      any_exact = true;
      exact_err = std::max(exact_err, row.error);
    } else {
      rmin = std::min(rmin, row.ratio);
      rmax = std::max(rmax, row.ratio);
      r.plotdata["ratio"].emplace_back(row.mesh, row.ratio);
      ratios.push_back(row.ratio);
    }
  }
  r.summary["ratios"] = ratios;
  if (rmax > 0.0) {
    const double spread = rmax / rmin;
    const double tol = tolerance(c, "ratio_spread", 10.0);
    checks.add("ratio_spread", spread <= tol, spread, tol);
  }
  if (any_exact) {
    const double tol = tolerance(c, "reproduction", 1e-9);
    checks.add("polynomial_reproduction", exact_err <= tol, exact_err, tol);
  }
}

void maximal(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto functions = functions_of(c);
  const auto spaces = schedule_spaces(c);
  const auto points = lattice_points(c, 64);
  const auto scales = default_scales();
  r.columns = {"function", "n", "dim", "max_ratio"};
  double worst = 0.0;
  bool trend_ok = true;
  json per_fn = json::object();
  for (const auto& f : functions) {
    const auto rep = check_maximal_inequality(spaces, f, points, scales, quad_depth_of(c));
    for (std::size_t s = 0; s < spaces.size(); ++s) {
      r.rows.push_back({f.name(), num(c.schedule[s]), num(rep.dims[s]), num(rep.max_ratio_by_space[s])});
      r.plotdata["ratio_" + f.name()].emplace_back(static_cast<double>(c.schedule[s]), rep.max_ratio_by_space[s]);
    }
    worst = std::max(worst, rep.max_ratio);
    const bool t = no_upward_trend(rep.max_ratio_by_space, tolerance(c, "trend", 0.25));
    trend_ok = trend_ok && t;
    per_fn[f.name()] = {{"max_ratio", rep.max_ratio}, {"by_n", rep.max_ratio_by_space}, {"trend_ok", t}};
  }
  r.summary["functions"] = per_fn;
  r.summary["C_k"] = worst;
  const double tol = tolerance(c, "constant", 4.0 * c.order);
  checks.add("maximal_constant", worst <= tol, worst, tol);
  checks.add("no_upward_trend", trend_ok, trend_ok ? 0.0 : 1.0, 0.0);
}

void tower_check(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto mart = make_martingale(nested_program(c), source_of(c), c.schedule,
                                    {quad_depth_of(c), 1e-7});
  r.columns = {"m", "n", "defect"};
  const auto& D = mart.defects();
  for (Eigen::Index n = 1; n < D.cols(); ++n) {
    for (Eigen::Index m = 0; m < n; ++m) {
      r.rows.push_back({num(c.schedule[static_cast<std::size_t>(m)]), num(c.schedule[static_cast<std::size_t>(n)]), num(D(m, n))});
    }
  }
  for (std::size_t i = 0; i < mart.size(); ++i) {
    r.plotdata["l1_norm"].emplace_back(static_cast<double>(c.schedule[i]), mart.l1_norms()[i]);
  }
  r.summary["l1_norms"] = mart.l1_norms();
  const double tol = tolerance(c, "defect", 1e-9);
  checks.add("consistency", mart.max_defect() <= tol, mart.max_defect(), tol);
  const bool t = no_upward_trend(mart.l1_norms(), tolerance(c, "trend", 0.25));
  checks.add("l1_no_upward_trend", t, mart.l1_norms().back(), 0.0);
}

void shadrin(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  r.columns = {"n", "dim", "width", "ratio", "worst_center"};
  std::vector<double> ratios;
  for (const auto& space : schedule_spaces(c)) {
    double w = c.record.value("width", 0.0);
    if (!(w > 0.0)) {
      w = kInf;
      for (const auto& span : space.spans()) w = std::min(w, span.length());
      w *= 0.5;
    }
    const auto res = shadrin_probe(DualBasis(space), w);
    ratios.push_back(res.ratio);
    r.rows.push_back({num(c.schedule[ratios.size() - 1]), num(space.dimension()), num(w), num(res.ratio),
                      num(res.worst_center)});
    r.plotdata["ratio"].emplace_back(static_cast<double>(c.schedule[ratios.size() - 1]), res.ratio);
  }
  const double worst = *std::max_element(ratios.begin(), ratios.end());
  r.summary["ratios"] = ratios;
  if (c.order == 1) {
    double dev = 0.0;
    for (double x : ratios) dev = std::max(dev, std::abs(x - 1.0));
    const double tol = tolerance(c, "unit", 1e-10);
    checks.add("unit_norm", dev <= tol, dev, tol);
  } else {
    const double tol = tolerance(c, "max_norm", 4.0 * c.order);
    checks.add("bounded_norm", worst <= tol, worst, tol);
  }
  checks.add("no_upward_trend", no_upward_trend(ratios, tolerance(c, "trend", 0.25)), worst, 0.0);
}

void singular_decay(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto nu = measure_of(c);
  const double margin = c.record.value("points", json::object()).is_object()
                            ? c.record.value("points", json::object()).value("margin", 0.05)
                            : tolerance(c, "margin", 0.05);
  const auto points = sample_points(c, [&](double t) { return nu.singular_distance(t); }, 20, 0.05);
  SingularDecayOptions opt;
  opt.margin = margin;
  opt.quad_depth = quad_depth_of(c);
  const auto rep = singular_decay_experiment(nested_program(c), nu, points, c.schedule, opt);
  r.columns = {"point", "n", "norm", "bound"};
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t s = 0; s < c.schedule.size(); ++s) {
      const auto pi = static_cast<Eigen::Index>(p);
      const auto si = static_cast<Eigen::Index>(s);
      r.rows.push_back({num(points[p]), num(c.schedule[s]), num(rep.norms(pi, si)), num(rep.bounds(pi, si))});
      r.plotdata["trajectory_p" + std::to_string(p)].emplace_back(static_cast<double>(c.schedule[s]), rep.norms(pi, si));
    }
  }
  r.summary["points"] = points;
  r.summary["C"] = rep.C;
  r.summary["q"] = rep.q;
  json factors = json::array();
  for (double f : rep.decay_factor) factors.push_back(finite_or_null(f));
  r.summary["decay_factor"] = factors;
  r.summary["rate"] = rep.rate;
  checks.add("dominated", rep.dominated, rep.dominated ? 0.0 : 1.0, 0.0);
  const double tol = tolerance(c, "decay_factor", 10.0);
  checks.add("decay_factor", rep.min_decay_factor >= tol, rep.min_decay_factor, tol);
}

std::vector<std::optional<LimitBasis>> limit_bases(const ExperimentConfig& c, const KnotProgram& program,
                                                   const Decomposition& dec,
                                                   const std::vector<std::size_t>& fallback_schedule) {
  LimitBasisOptions opt;
  const json l = c.record.value("limit", json::object());
  if (l.contains("schedule")) {
    ExperimentConfig sub = c;
    sub.record = l;
    opt.schedule = parse_schedule(sub, "schedule");
  } else {
    opt.schedule = fallback_schedule;
  }
  opt.budget = l.value("budget", opt.budget);
  opt.tol = l.value("tol", opt.tol);
  std::vector<std::optional<LimitBasis>> bases(dec.components.size());
  for (std::size_t j = 0; j < dec.components.size(); ++j) {
    if (dec.components[j].length() > 0.0) bases[j] = build_limit_basis(program, j, opt);
  }
  return bases;
}

void converge(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto program = nested_program(c);
  const auto source = source_of(c);
  const auto nu = source_measure(source);
  const auto dec = decompose(program);
  std::vector<double> excluded = dec.boundary_points();
  for (const auto& p : dec.accumulation.points()) excluded.push_back(p.x);
  const bool singular = !nu.atoms.empty() || nu.cantor.has_value();
  auto distance = [&](double t) {
    double d = kInf;
    for (double x : excluded) d = std::min(d, std::abs(t - x));
    if (singular) d = std::min(d, nu.singular_distance(t));
    return d;
  };
  const auto points = sample_points(c, distance, 20, 0.05);

  const auto mart = make_martingale(program, source, c.schedule, {quad_depth_of(c), 1e-7});
  auto bases = limit_bases(c, program, dec, c.schedule);
  json comps = json::array();
  for (std::size_t j = 0; j < bases.size(); ++j) {
    json rec = {{"lo", dec.components[j].lo}, {"hi", dec.components[j].hi}};
    if (bases[j]) {
      rec["dim"] = bases[j]->dimension();
      rec["unsettled"] = bases[j]->unsettled();
      rec["report"] = bases[j]->report;
    }
    comps.push_back(rec);
  }
  const auto predicted = predicted_limit(mart, dec, std::move(bases), nu.density);
  ConvergenceThresholds th;
  th.pointwise = tolerance(c, "pointwise", th.pointwise);
  th.certificate = tolerance(c, "certificate", th.certificate);
  const auto rep = convergence_report(mart, predicted, points, th);

  r.columns = {"point", "n", "gap", "bound"};
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t s = 0; s < c.schedule.size(); ++s) {
      const double gap = rep.gaps(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(s));
      r.rows.push_back({num(points[p]), num(c.schedule[s]), num(gap), num(rep.certificates[p])});
      r.plotdata["gap_p" + std::to_string(p)].emplace_back(static_cast<double>(c.schedule[s]), gap);
    }
  }
  double worst_gap = 0.0, worst_cert = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    worst_gap = std::max(worst_gap, rep.final_gaps[p]);
    worst_cert = std::max(worst_cert, rep.certificates[p]);
  }
  r.summary["points"] = points;
  r.summary["final_gaps"] = rep.final_gaps;
  json certs = json::array();
  for (double x : rep.certificates) certs.push_back(finite_or_null(x));
  r.summary["certificates"] = certs;
  r.summary["components"] = comps;
  r.summary["max_consistency_defect"] = mart.max_defect();
  checks.add("final_gap", worst_gap <= th.pointwise, worst_gap, th.pointwise);
  if (c.record.value("certify", true)) {
    checks.add("certificate", worst_cert <= th.certificate, worst_cert, th.certificate);
  } else {
    r.summary["max_certificate"] = finite_or_null(worst_cert);
  }
  checks.add("gap_trend", rep.trend_ok, rep.trend_ok ? 0.0 : 1.0, 0.0);
}

// max |<N_i*, N_j> - delta_ij| by quadrature of dual values against the basis.
double biorthogonality_defect(const DualBasis& duals) {
  const auto& space = duals.space();
  const auto dim = static_cast<Eigen::Index>(space.dimension());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  const auto& rule = gauss_legendre(static_cast<std::size_t>(space.order()) + 1);
  const auto& a = duals.dense();
  const auto& spans = space.spans();
  for (std::size_t s = 0; s < spans.size(); ++s) {
    for_each_offset(spans[s].lo, 0.0, spans[s].length(), rule, 1, [&](double, double off, double w) {
      const auto b = eval_basis_in_span(space, s, off);
      Eigen::VectorXd dv = Eigen::VectorXd::Zero(dim);
      for (std::size_t r = 0; r < b.count; ++r) dv += b.values[r] * a.col(static_cast<Eigen::Index>(b.first + r));
      for (std::size_t r = 0; r < b.count; ++r) {
        m.col(static_cast<Eigen::Index>(b.first + r)) += w * b.values[r] * dv;
      }
    });
  }
  return (m - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

void limit_construct(const ExperimentConfig& c, ExperimentResult& r, Checks& checks) {
  const auto program = nested_program(c);
  const auto dec = decompose(program);
  std::vector<std::size_t> which;
  if (c.record.contains("component")) {
    const auto j = c.record.at("component").get<std::size_t>();
    if (j >= dec.components.size()) {
      fail_at(c, "component", "component index out of range (" + std::to_string(dec.components.size()) + " components)");
    }
    which.push_back(j);
  } else {
    for (std::size_t j = 0; j < dec.components.size(); ++j) {
      if (dec.components[j].length() > 0.0) which.push_back(j);
    }
  }
  const auto bases = limit_bases(c, program, dec, c.schedule);
  r.columns = {"component", "j", "support_lo", "support_hi", "stabilization_n", "settled"};
  double biorth = 0.0, mismatch = 0.0;
  bool exceeded = false;
  json comps = json::array();
  for (std::size_t j0 : which) {
    const auto& b = bases[j0];
    if (!b) continue;
    json rec = {{"component", j0}, {"lo", b->component.lo}, {"hi", b->component.hi},
                {"lo_in_B", b->component.lo_in_b}, {"hi_in_B", b->component.hi_in_b},
                {"final_n", b->final_n}, {"dim", b->dimension()}, {"unsettled", b->unsettled()},
                {"budget_exceeded", b->budget_exceeded}, {"report", b->report}};
    exceeded = exceeded || b->budget_exceeded;
    if (b->duals) {
      const double bd = biorthogonality_defect(*b->duals);
      const double mm = global_local_mismatch(*b, program, b->final_n);
      biorth = std::max(biorth, bd);
      mismatch = std::max(mismatch, mm);
      rec["biorthogonality_defect"] = bd;
      rec["global_local_mismatch"] = mm;
      for (std::size_t j = 0; j < b->dimension(); ++j) {
        r.rows.push_back({num(j0), num(j), num(b->space().support_lo(j)), num(b->space().support_hi(j)),
                          num(b->stabilization_n[j]), flag(b->settled[j])});
        r.plotdata["stabilization_c" + std::to_string(j0)].emplace_back(static_cast<double>(j),
                                                                         static_cast<double>(b->stabilization_n[j]));
      }
    }
    comps.push_back(rec);
  }
  r.summary["components"] = comps;
  const double tb = tolerance(c, "biorthogonality", 1e-8);
  const double tm = tolerance(c, "mismatch", 1e-9);
  checks.add("biorthogonality", biorth <= tb, biorth, tb);
  checks.add("global_local_match", mismatch <= tm, mismatch, tm);
  checks.add("within_budget", !exceeded, exceeded ? 1.0 : 0.0, 0.0);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult r;
  r.experiment = c.experiment;
  Checks checks;
  r.summary = json::object();
  try {
    const std::string& e = c.experiment;
    if (e == "gram-decay") gram_decay(c, r, checks);
    else if (e == "project") project(c, r, checks);
    else if (e == "jackson") jackson(c, r, checks);
    else if (e == "maximal") maximal(c, r, checks);
    else if (e == "tower-check") tower_check(c, r, checks);
    else if (e == "shadrin-probe") shadrin(c, r, checks);
    else if (e == "singular-decay") singular_decay(c, r, checks);
    else if (e == "converge") converge(c, r, checks);
    else if (e == "limit-construct") limit_construct(c, r, checks);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    r.summary["error"] = ex.what();
    checks.pass = false;
  }
  r.pass = checks.pass && !r.summary.contains("error");
  r.summary["format"] = kResultsVersion;
  r.summary["experiment"] = c.experiment;
  r.summary["order"] = c.order;
  r.summary["seed"] = c.seed;
  r.summary["schedule"] = c.schedule;
  r.summary["checks"] = checks.record;
  r.summary["verdict"] = r.pass ? "PASS" : "FAIL";
  return r;
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "# " << kResultsVersion << " experiment=" << r.experiment << " columns=";
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? ";" : "") << r.columns[i];
  os << "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

void write_artifacts(const ExperimentResult& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    out << results_csv(r);
  }
  {
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << r.summary.dump(2) << "\n";
  }
  if (!r.plotdata.empty()) {
    fs::create_directories(dir / "plotdata");
    for (const auto& [name, pts] : r.plotdata) {
      std::ofstream out(dir / "plotdata" / (name + ".csv"), std::ios::binary);
      out << "x,y\n";
      for (const auto& [x, y] : pts) out << format_number(x) << "," << format_number(y) << "\n";
    }
  }
}

int run_command(const std::filesystem::path& config_path, std::optional<std::filesystem::path> out_dir,
                std::optional<std::uint64_t> seed) {
  ExperimentResult result;
  std::filesystem::path dir;
  try {
    auto cfg = load_config(config_path);
    apply_seed_override(cfg, seed);
    dir = out_dir ? *out_dir : std::filesystem::path(cfg.out_dir.value_or("results/" + cfg.experiment));
    result = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config_error);
  }
  try {
    write_artifacts(result, dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot write results to " << dir.string() << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::config_error);
  }
  std::cout << result.experiment << ": " << result.summary.at("verdict").get<std::string>() << " ("
            << dir.string() << ")\n";
  if (result.summary.contains("error")) std::cerr << "error: " << result.summary.at("error").get<std::string>() << "\n";
  return static_cast<int>(result.pass ? ExitCode::pass : ExitCode::fail);
}

// ---------------------------------------------------------------------------
// Registry

namespace {

json entries_json(const std::vector<RegistryEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json params = json::array();
    for (const auto& p : e.params) {
      params.push_back({{"name", p.name}, {"type", p.type}, {"default", p.default_value}, {"description", p.description}});
    }
    arr.push_back({{"name", e.name}, {"description", e.description}, {"params", params}});
  }
  return arr;
}

void entries_text(std::ostringstream& os, const std::string& title, const std::vector<RegistryEntry>& entries) {
  os << title << ":\n";
  for (const auto& e : entries) {
    os << "  " << e.name << "  - " << e.description << "\n";
    for (const auto& p : e.params) {
      os << "      " << p.name << " (" << p.type << ", default " << p.default_value << "): " << p.description << "\n";
    }
  }
}

}  // namespace

json registry_json() {
  return {{"experiments", experiment_names()},
          {"knot_families", entries_json(knot_family_registry())},
          {"functions", entries_json(function_registry())},
          {"measures", entries_json(measure_registry())}};
}

std::string registry_text() {
  std::ostringstream os;
  os << "experiments:\n";
  for (const auto& e : experiment_names()) os << "  " << e << "\n";
  entries_text(os, "knot families", knot_family_registry());
  entries_text(os, "functions", function_registry());
  entries_text(os, "measures", measure_registry());
  return os.str();
}

}  // namespace splinemart
