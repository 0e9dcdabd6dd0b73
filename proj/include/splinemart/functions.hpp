#pragma once

// R^d-valued functions and finite vector measures on [0,1], plus the
// name-based registry used by experiment configs.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "splinemart/bspline.hpp"

namespace splinemart {

/// Bounded function [0,1] -> R^d with the metadata quadrature needs: the
/// interior points where it fails to be smooth and, for piecewise
/// polynomials, the degree between those points.
class FunctionSpec {
 public:
  enum class Kind { closed_form, piecewise_polynomial, spline };
  /// Writes f(t) into out[0 .. dim-1].
  using Sampler = std::function<void(double t, double* out)>;

  FunctionSpec(std::string name, Kind kind, std::size_t dim, Sampler sampler,
               std::vector<double> breakpoints = {}, int poly_degree = -1,
               bool continuous = true);

  static FunctionSpec scalar(std::string name, std::function<double(double)> f,
                             std::vector<double> breakpoints = {}, int poly_degree = -1,
                             bool continuous = true);
  static FunctionSpec constant(Eigen::VectorXd value);
  static FunctionSpec polynomial(std::vector<double> coeffs);
  static FunctionSpec from_spline(Spline s, std::string name = "spline");
  /// Components of the parts stacked into one vector-valued function.
  static FunctionSpec stack(const std::vector<FunctionSpec>& parts, std::string name = "vector");

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t dimension() const { return dim_; }
  [[nodiscard]] const std::vector<double>& breakpoints() const { return breaks_; }
  /// Degree between breakpoints, or -1 if not a piecewise polynomial.
  [[nodiscard]] int poly_degree() const { return degree_; }
  [[nodiscard]] bool continuous() const { return continuous_; }
  [[nodiscard]] const std::optional<Spline>& spline() const { return spline_; }

  void eval(double t, double* out) const { sampler_(t, out); }
  [[nodiscard]] Eigen::VectorXd operator()(double t) const;
  /// First component.
  [[nodiscard]] double scalar_value(double t) const;

  [[nodiscard]] FunctionSpec component(std::size_t c) const;
  [[nodiscard]] FunctionSpec scaled(double factor) const;

 private:
  std::string name_;
  Kind kind_;
  std::size_t dim_;
  Sampler sampler_;
  std::vector<double> breaks_;
  int degree_;
  bool continuous_;
  std::optional<Spline> spline_;
};

struct Atom {
  double x = 0.0;
  Eigen::VectorXd weight;
};

/// The Cantor measure scaled by a vector weight. `level` is the minimum
/// recursion depth of the self-similar integration.
struct CantorPart {
  int level = 8;
  Eigen::VectorXd weight;
};

/// Finite R^d-valued measure g dlambda + sum_a w_a delta_{x_a} + w_c mu_Cantor.
struct MeasureSpec {
  std::optional<FunctionSpec> density;
  std::vector<Atom> atoms;
  std::optional<CantorPart> cantor;

  static MeasureSpec from_density(FunctionSpec f);
  static MeasureSpec dirac(double x, Eigen::VectorXd weight);
  static MeasureSpec cantor_measure(int level, Eigen::VectorXd weight);

  [[nodiscard]] std::size_t dimension() const;
  /// nu([0,1]); the density part is integrated with the given panel count.
  [[nodiscard]] Eigen::VectorXd total_mass() const;
  /// Upper bound of |nu|([0,1]) using Euclidean norms of the weights.
  [[nodiscard]] double total_variation() const;
  /// |nu_s|([a, b]) for the singular (atomic + Cantor) part, closed interval.
  [[nodiscard]] double singular_variation(double a, double b) const;
  /// Distance from t to the support of the singular part.
  [[nodiscard]] double singular_distance(double t) const;
  [[nodiscard]] bool is_singular() const { return !density.has_value(); }

  [[nodiscard]] MeasureSpec component(std::size_t c) const;
};

/// Devil's staircase (Cantor function), continuous and non-decreasing.
[[nodiscard]] FunctionSpec cantor_staircase();

/// Normalized bump of unit integral: c (1 - u^2)^2 with u = 2 (t - center) / width,
/// clipped to [0,1] before normalization.
[[nodiscard]] FunctionSpec bump(double center, double width);

// -- Registry ---------------------------------------------------------------

struct ParamInfo {
  std::string name;
  std::string type;
  std::string default_value;
  std::string description;
};

struct RegistryEntry {
  std::string name;
  std::string description;
  std::vector<ParamInfo> params;
};

[[nodiscard]] const std::vector<RegistryEntry>& function_registry();
[[nodiscard]] const std::vector<RegistryEntry>& measure_registry();
[[nodiscard]] const std::vector<RegistryEntry>& knot_family_registry();

/// Builds a function from a record such as {"name": "step", "at": 0.5}. A bare
/// string is shorthand for {"name": <string>}. Throws ConfigError.
[[nodiscard]] FunctionSpec make_function(const nlohmann::json& record);
/// {"density": <function>, "atoms": [{"at": x, "weight": w}], "cantor": {"level": L, "weight": w}}
/// or a named shorthand ({"name": "dirac", "at": x} / {"name": "cantor", "level": L}).
[[nodiscard]] MeasureSpec make_measure(const nlohmann::json& record);
/// {"family": "geometric-to-point", "target": 0.5, "ratio": 0.5, "side": "left"}.
[[nodiscard]] KnotProgram make_program(const nlohmann::json& record, int order);

[[nodiscard]] nlohmann::json spline_to_json(const Spline& s);
[[nodiscard]] Spline spline_from_json(const nlohmann::json& record);

}  // namespace splinemart
