#pragma once

// Gram matrices of B-spline bases, dual B-splines, and fits of the
// geometric decay of the inverse Gram matrix.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "splinemart/banded.hpp"
#include "splinemart/bspline.hpp"

namespace splinemart {

/// Dense inverse Gram matrices are only formed up to this dimension.
inline constexpr std::size_t kDenseDualLimit = 2000;

/// G_ij = <N_i, N_j>, exact per-span Gauss-Legendre (k nodes). Not factored.
[[nodiscard]] BandedSPDMatrix gram_matrix(const SplineSpace& space);

/// Factored Gram matrix of a space plus, for dim <= kDenseDualLimit, the dense
/// inverse A = (a_ij) with N_i* = sum_j a_ij N_j.
class DualBasis {
 public:
  explicit DualBasis(SplineSpace space);

  [[nodiscard]] const SplineSpace& space() const { return space_; }
  [[nodiscard]] const BandedSPDMatrix& gram() const { return gram_; }
  [[nodiscard]] std::size_t dimension() const { return space_.dimension(); }

  [[nodiscard]] bool has_dense() const { return dense_.has_value(); }
  /// Dense A; throws if the space is too large.
  [[nodiscard]] const Eigen::MatrixXd& dense() const;

  /// Row a_i. (dense lookup or one banded solve).
  [[nodiscard]] Eigen::VectorXd row(std::size_t i) const;
  [[nodiscard]] double coefficient(std::size_t i, std::size_t j) const;

  /// G^{-1} rhs, column by column.
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return gram_.solve(rhs); }

  /// N_i*(t).
  [[nodiscard]] double eval(std::size_t i, double t) const;
  /// All dual values N_0*(t) .. N_{dim-1}*(t).
  [[nodiscard]] Eigen::VectorXd eval_all(double t) const;

 private:
  SplineSpace space_;
  BandedSPDMatrix gram_;
  std::optional<Eigen::MatrixXd> dense_;
};

/// A = G^{-1} as a dense matrix (any dimension; cost O(dim^2 k)).
[[nodiscard]] Eigen::MatrixXd dual_coefficients(const SplineSpace& space);

[[nodiscard]] double eval_dual(const DualBasis& duals, std::size_t i, double t);

/// Fit of max_{|i-j|=m} |a_ij| h_ij ~ C q^m.
struct DecayFit {
  double q_hat = 0.0;
  double C_hat = 0.0;
  /// M_m = max_{|i-j|=m} |a_ij| h_ij for m = 0 .. dim-1.
  std::vector<double> offset_max;
  /// M_m / q_hat^m for the offsets kept by the noise floor (others are NaN).
  std::vector<double> residuals;
  std::size_t fit_lo = 0;  ///< offsets fit_lo..fit_hi entered the regression
  std::size_t fit_hi = 0;
  std::size_t kept = 0;    ///< number of offsets above the noise floor

  [[nodiscard]] double max_residual() const { return C_hat; }
};

inline constexpr double kDecayNoiseFloor = 1e-14;

/// Least-squares fit of log M_m against m over the upper half of the
/// contiguous run of offsets with M_m >= noise_floor (the lower half carries
/// a polynomial prefactor that biases short fits). C_hat is the largest
/// residual over every kept offset. Order 1 gives q_hat = 0.
[[nodiscard]] DecayFit fit_decay(const DualBasis& duals, double noise_floor = kDecayNoiseFloor);
[[nodiscard]] DecayFit fit_decay(const SplineSpace& space, double noise_floor = kDecayNoiseFloor);

/// max over kept offsets of |a_ij| h_ij / q^{|i-j|} for a prescribed q.
[[nodiscard]] double decay_constant(const DualBasis& duals, double q,
                                    double noise_floor = kDecayNoiseFloor);

[[nodiscard]] std::string decay_csv_header();
[[nodiscard]] std::string decay_csv_row(const DecayFit& fit, int order, std::size_t n,
                                        const std::string& family);

}  // namespace splinemart
