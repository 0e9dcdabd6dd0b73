#pragma once

// Spline martingales generated by a knot program, the pairing T, limit
// B-splines on the accumulation-free components and their duals, the
// explicit a.e. limit, and decay of projected singular measures.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "splinemart/functions.hpp"
#include "splinemart/gram.hpp"
#include "splinemart/knots.hpp"
#include "splinemart/projection.hpp"

namespace splinemart {

using MartingaleSource = std::variant<FunctionSpec, MeasureSpec>;

[[nodiscard]] MeasureSpec source_measure(const MartingaleSource& source);

struct MartingaleOptions {
  std::size_t quad_depth = kDefaultQuadDepth;
  /// Pairwise consistency defects above this raise ConsistencyError.
  double max_defect = 1e-7;
};

/// g_n = P_n(source) for every n of the schedule, with the pairwise
/// consistency defects max |P_m g_n - g_m| / max(1, max |g_m|) in coefficients.
class SplineMartingale {
 public:
  SplineMartingale(KnotProgram program, MartingaleSource source, std::vector<std::size_t> schedule,
                   MartingaleOptions options = {});

  [[nodiscard]] const KnotProgram& program() const { return program_; }
  [[nodiscard]] const MartingaleSource& source() const { return source_; }
  [[nodiscard]] const std::vector<std::size_t>& schedule() const { return schedule_; }
  [[nodiscard]] std::size_t size() const { return schedule_.size(); }
  [[nodiscard]] std::size_t output_dim() const { return output_dim_; }
  [[nodiscard]] const DualBasis& duals(std::size_t idx) const { return duals_[idx]; }
  [[nodiscard]] const SplineSpace& space(std::size_t idx) const { return duals_[idx].space(); }
  [[nodiscard]] const Spline& term(std::size_t idx) const { return terms_[idx]; }
  [[nodiscard]] const Spline& last() const { return terms_.back(); }
  [[nodiscard]] const MartingaleOptions& options() const { return options_; }

  /// defects(m, n) for schedule indices m < n (zero elsewhere).
  [[nodiscard]] const Eigen::MatrixXd& defects() const { return defects_; }
  [[nodiscard]] double max_defect() const { return defects_.maxCoeff(); }
  [[nodiscard]] const std::vector<double>& l1_norms() const { return l1_; }

 private:
  KnotProgram program_;
  MartingaleSource source_;
  std::vector<std::size_t> schedule_;
  MartingaleOptions options_;
  std::size_t output_dim_ = 1;
  std::vector<DualBasis> duals_;
  std::vector<Spline> terms_;
  Eigen::MatrixXd defects_;
  std::vector<double> l1_;
};

[[nodiscard]] SplineMartingale make_martingale(const KnotProgram& program,
                                               const MartingaleSource& source,
                                               const std::vector<std::size_t>& schedule,
                                               MartingaleOptions options = {});

/// Coefficient defect of coarse against the projection of fine onto its space.
[[nodiscard]] double consistency_defect(const Spline& fine, const DualBasis& coarse_duals,
                                        const Spline& coarse);

/// T(f) = int g_m f for the first schedule entry m whose space contains f,
/// cross-checked against the next entry (ConsistencyError beyond 1e-8).
[[nodiscard]] Eigen::VectorXd functional_T(const SplineMartingale& mart, const Spline& f);

// -- Limit B-splines --------------------------------------------------------

/// The k-fold padded local knot sequence s^{(n)} of component j0: the first n
/// knots that lie in V_{j0}, with each endpoint in V_{j0} repeated k times.
[[nodiscard]] std::vector<double> local_knots(const KnotProgram& program,
                                              const Component& component, std::size_t n);

struct LimitBasisOptions {
  /// Increasing n sweep; empty means doubling from 8 up to `budget`.
  std::vector<std::size_t> schedule;
  std::size_t budget = 1024;
  /// Stabilization tolerance for dual values, relative to max(1, |dual|).
  double tol = 1e-9;
};

struct LimitBasis {
  std::size_t component_index = 0;
  Component component;
  int order = 1;
  std::size_t final_n = 0;
  std::optional<DualBasis> duals;  ///< duals of the local space at final_n
  bool left_padded = false;
  bool right_padded = false;
  /// Per local basis function: first sweep n from which its knots and its
  /// dual values stay within tol of the final ones.
  std::vector<std::size_t> stabilization_n;
  std::vector<bool> settled;
  bool budget_exceeded = false;
  std::string report;

  [[nodiscard]] const SplineSpace& space() const { return duals->space(); }
  [[nodiscard]] std::size_t dimension() const { return duals ? duals->dimension() : 0; }
  /// Number of local basis functions whose stabilization was not observed.
  [[nodiscard]] std::size_t unsettled() const;
  /// N-bar_j(t), zero outside V_{j0}.
  [[nodiscard]] double basis(std::size_t j, double t) const;
  /// N-bar_j*(t), zero outside V_{j0}.
  [[nodiscard]] double dual(std::size_t j, double t) const;
  /// Span I-bar(t) of the local sequence and its index i-bar(t).
  [[nodiscard]] KnotSpan interval(double t) const;
};

[[nodiscard]] LimitBasis build_limit_basis(const KnotProgram& program, std::size_t j0,
                                           const LimitBasisOptions& options = {});

/// max over a lattice of V_{j0} of |N_j^{(n)} 1_V - N-bar_j| over the global
/// B-splines at n that are matched to a local one (knots outside V on the B
/// side moved onto the B endpoint).
[[nodiscard]] double global_local_mismatch(const LimitBasis& basis, const KnotProgram& program,
                                           std::size_t n);

// -- Predicted limit --------------------------------------------------------

struct PredictOptions {
  /// Dual decay constants for the truncation certificate; q <= 0 means fit
  /// them on the local spaces.
  double C = 0.0;
  double q = 0.0;
};

/// g 1_{V^c} + sum_{j0} sum_j T(N-bar_j) N-bar_j* 1_{U_{j0}}.
class PredictedLimit {
 public:
  PredictedLimit(Decomposition decomposition, std::vector<std::optional<LimitBasis>> bases,
                 std::vector<Eigen::MatrixXd> coefficients, std::optional<FunctionSpec> g_abscont,
                 std::vector<std::pair<double, double>> decay, double mass_bound,
                 std::size_t output_dim);

  [[nodiscard]] Eigen::VectorXd operator()(double t) const;
  /// Majorant C M sum q^{|j - i-bar(t)|} / lambda(I-bar(t)) over the local
  /// indices that are missing from, or not settled in, the finite basis.
  [[nodiscard]] double certificate(double t) const;
  [[nodiscard]] std::size_t output_dim() const { return d_; }
  [[nodiscard]] const Decomposition& decomposition() const { return dec_; }
  [[nodiscard]] const std::optional<LimitBasis>& basis(std::size_t j0) const { return bases_[j0]; }
  /// T(N-bar_j) for component j0, one row per local basis function.
  [[nodiscard]] const Eigen::MatrixXd& functional_values(std::size_t j0) const { return tvals_[j0]; }
  [[nodiscard]] FunctionSpec as_function() const;

 private:
  Decomposition dec_;
  std::vector<std::optional<LimitBasis>> bases_;
  std::vector<Eigen::MatrixXd> tvals_;
  std::vector<Eigen::MatrixXd> coeffs_;
  std::optional<FunctionSpec> g_;
  std::vector<std::pair<double, double>> decay_;
  double mass_;
  std::size_t d_;
};

/// T(N-bar_j) is evaluated as int N-bar_j dnu for the source measure nu (the
/// continuous extension of T). `bases` is indexed by component; components
/// of positive length without a basis evaluate to NaN.
[[nodiscard]] PredictedLimit predicted_limit(const SplineMartingale& mart,
                                             const Decomposition& decomposition,
                                             std::vector<std::optional<LimitBasis>> bases,
                                             std::optional<FunctionSpec> g_abscont,
                                             const PredictOptions& options = {});

// -- Singular decay ---------------------------------------------------------

struct SingularDecayOptions {
  double margin = 0.05;
  std::size_t quad_depth = kDefaultQuadDepth;
  /// Majorant constants; q <= 0 means fit on the schedule spaces.
  double C = 0.0;
  double q = 0.0;
};

struct SingularDecayReport {
  std::vector<double> points;
  std::vector<std::size_t> ns;
  std::vector<Eigen::MatrixXd> values;  ///< per n: point x d values of P_n nu
  Eigen::MatrixXd norms;                ///< point x n, ||P_n nu(t)||
  Eigen::MatrixXd bounds;               ///< point x n, majorant
  std::vector<double> decay_factor;     ///< norms(first) / norms(last) per point
  std::vector<double> rate;             ///< geometric mean per-step reduction
  double C = 0.0;
  double q = 0.0;
  bool dominated = true;
  double min_decay_factor = 0.0;
};

[[nodiscard]] SingularDecayReport singular_decay_experiment(const KnotProgram& program,
                                                            const MeasureSpec& nu_s,
                                                            std::span<const double> points,
                                                            std::span<const std::size_t> schedule,
                                                            const SingularDecayOptions& options = {});

/// C sum_{i,j} q^{|i-j|} theta(supp N_i) N_j(t) / h_ij with theta = |nu_s|.
[[nodiscard]] double singular_majorant(const SplineSpace& space, const MeasureSpec& nu_s,
                                       double t, double C, double q);

/// Common (C, q) for a family of spaces: q the largest fitted q_hat, C the
/// largest decay constant for that q.
[[nodiscard]] std::pair<double, double> common_decay(std::span<const DualBasis* const> duals);

// -- Reports ----------------------------------------------------------------

struct ConvergenceThresholds {
  double pointwise = 1e-6;
  double certificate = 1e-8;
};

struct ConvergenceReport {
  std::vector<double> points;
  std::vector<std::size_t> ns;
  std::vector<Eigen::MatrixXd> values;   ///< per n: point x d values of g_n
  Eigen::MatrixXd predicted;             ///< point x d
  Eigen::MatrixXd gaps;                  ///< point x n
  std::vector<double> certificates;
  std::vector<double> final_gaps;
  std::vector<bool> point_pass;
  bool trend_ok = true;  ///< last gap <= first gap at every point
  bool pass = true;
};

[[nodiscard]] ConvergenceReport convergence_report(const SplineMartingale& mart,
                                                   const PredictedLimit& predicted,
                                                   std::span<const double> points,
                                                   const ConvergenceThresholds& thresholds = {});

}  // namespace splinemart
