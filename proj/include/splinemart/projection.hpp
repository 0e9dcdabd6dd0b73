#pragma once

// Orthogonal projection onto spline spaces for functions and measures, and
// the numerical probes built on it: self-adjointness, L1 boundedness, the
// maximal inequality, moduli of smoothness and Jackson ratios.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "splinemart/functions.hpp"
#include "splinemart/gram.hpp"

namespace splinemart {

/// Gauss-Legendre nodes per panel for integrands that are not piecewise polynomials.
inline constexpr std::size_t kSmoothNodes = 10;
inline constexpr std::size_t kDefaultQuadDepth = 2;

/// B_ic = <f_c, N_i>: each knot span is cut at the breakpoints of f; pieces
/// get one exact Gauss rule when f is a piecewise polynomial and quad_depth
/// panels of kSmoothNodes nodes otherwise.
[[nodiscard]] Eigen::MatrixXd basis_moments(const SplineSpace& space, const FunctionSpec& f,
                                            std::size_t quad_depth = kDefaultQuadDepth);
/// B_ic = int N_i dnu_c.
[[nodiscard]] Eigen::MatrixXd basis_moments(const SplineSpace& space, const MeasureSpec& nu,
                                            std::size_t quad_depth = kDefaultQuadDepth);

[[nodiscard]] Spline project_function(const DualBasis& duals, const FunctionSpec& f,
                                      std::size_t quad_depth = kDefaultQuadDepth);
[[nodiscard]] Spline project_function(const SplineSpace& space, const FunctionSpec& f,
                                      std::size_t quad_depth = kDefaultQuadDepth);
[[nodiscard]] Spline project_measure(const DualBasis& duals, const MeasureSpec& nu,
                                     std::size_t quad_depth = kDefaultQuadDepth);
[[nodiscard]] Spline project_measure(const SplineSpace& space, const MeasureSpec& nu,
                                     std::size_t quad_depth = kDefaultQuadDepth);

/// int g_c f dlambda for vector g and scalar f, pieces cut at the
/// breakpoints of both.
[[nodiscard]] Eigen::VectorXd integrate_product(const FunctionSpec& g, const FunctionSpec& f,
                                                std::size_t quad_depth = kDefaultQuadDepth);

/// Componentwise int P g f - int g P f.
[[nodiscard]] Eigen::VectorXd self_adjoint_defects(const DualBasis& duals, const FunctionSpec& g,
                                                   const FunctionSpec& f,
                                                   std::size_t quad_depth = kDefaultQuadDepth);
/// Euclidean norm of self_adjoint_defects.
[[nodiscard]] double check_self_adjoint(const DualBasis& duals, const FunctionSpec& g,
                                        const FunctionSpec& f,
                                        std::size_t quad_depth = kDefaultQuadDepth);

/// int_0^1 |s| (Euclidean norm for vector splines); exact up to root finding
/// for scalar splines.
[[nodiscard]] double l1_norm(const Spline& s);
[[nodiscard]] double l1_norm(const FunctionSpec& f, std::size_t panels = 64);

/// Points at which sup norms are sampled: 4k Chebyshev points per span plus
/// the span ends.
[[nodiscard]] std::vector<double> sup_lattice(const SplineSpace& space);
[[nodiscard]] double sup_norm(const Spline& s);
/// max over sup_lattice of ||f(t) - s(t)||.
[[nodiscard]] double sup_error(const FunctionSpec& f, const Spline& s);

struct ShadrinResult {
  double ratio = 0.0;  ///< max ||P b||_1 / ||b||_1
  double worst_center = 0.0;
  std::size_t centers = 0;
};

/// Lower estimate of ||P||_{L1 -> L1} from normalized bumps of the given width
/// centred at every knot, every span midpoint and the quarter points of each span.
[[nodiscard]] ShadrinResult shadrin_probe(const DualBasis& duals, double bump_width);

/// Lattice version of the Hardy-Littlewood maximal function of ||g||:
/// sup of interval averages over intervals I in [0,1] containing t whose
/// lengths are taken from `scales`; every length is swept through
/// `placements` positions between its two extreme placements.
class MaximalFunction {
 public:
  explicit MaximalFunction(const FunctionSpec& g, std::size_t cells = 4096);

  /// int_0^x ||g||.
  [[nodiscard]] double cumulative(double x) const;
  [[nodiscard]] double average(double a, double b) const;
  [[nodiscard]] double operator()(double t, std::span<const double> scales,
                                  std::size_t placements = 65) const;
  [[nodiscard]] double l1_norm() const { return table_.back(); }

 private:
  [[nodiscard]] double integral(double a, double b) const;

  FunctionSpec g_;
  std::size_t cells_;
  std::vector<double> table_;
};

/// Geometric lengths from 1 down to min_length (inclusive).
[[nodiscard]] std::vector<double> default_scales(std::size_t count = 48, double min_length = 1e-3);

[[nodiscard]] double maximal_function(const FunctionSpec& g, double t,
                                      std::span<const double> scales);

/// max over lattice levels u of u * lambda{Mg > u} / ||g||_1, the level sets
/// measured on an equispaced lattice of `lattice` points.
[[nodiscard]] double weak_type_ratio(const FunctionSpec& g, std::span<const double> levels,
                                     std::span<const double> scales, std::size_t lattice = 512);

struct MaximalReport {
  std::vector<double> points;
  std::vector<std::size_t> dims;   ///< dimension of each space
  Eigen::MatrixXd values;          ///< ||P_n g(t)||, point x space
  std::vector<double> maximal;     ///< lattice Mg(t)
  Eigen::MatrixXd ratios;          ///< values / maximal (0 where Mg = 0 and values vanish)
  std::vector<double> max_ratio_by_space;
  double max_ratio = 0.0;
};

[[nodiscard]] MaximalReport check_maximal_inequality(const std::vector<SplineSpace>& spaces,
                                                     const FunctionSpec& g,
                                                     std::span<const double> points,
                                                     std::span<const double> scales,
                                                     std::size_t quad_depth = kDefaultQuadDepth);

/// omega_k(f, delta) = sup_{0 <= h <= delta} sup_t ||D_h^k f(t)||, both sups
/// over equispaced lattices (h_steps steps for h, t_steps for t).
[[nodiscard]] double modulus_of_smoothness(const FunctionSpec& f, int k, double delta,
                                           std::size_t h_steps = 64, std::size_t t_steps = 2048);

struct JacksonRow {
  std::size_t dim = 0;
  double mesh = 0.0;
  double error = 0.0;  ///< ||f - P f||_inf on sup_lattice
  double omega = 0.0;  ///< omega_k(f, mesh)
  double ratio = 0.0;
  bool exact = false;  ///< omega vanishes: f is a polynomial of degree < k
};

[[nodiscard]] std::vector<JacksonRow> jackson_check(const std::vector<SplineSpace>& spaces,
                                                    const FunctionSpec& f,
                                                    std::size_t quad_depth = kDefaultQuadDepth);

}  // namespace splinemart
