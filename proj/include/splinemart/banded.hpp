#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace splinemart {

/// Symmetric positive-definite band matrix. Only the lower band is stored:
/// entry (i, i - d) for 0 <= d <= bandwidth lives at bands_[i * (bandwidth + 1) + d].
class BandedSPDMatrix {
 public:
  BandedSPDMatrix() = default;
  BandedSPDMatrix(std::size_t dim, std::size_t bandwidth);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::size_t bandwidth() const { return bw_; }

  /// Entry (i, j); exactly zero outside the band.
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const;
  /// Adds v to (i, j) and, implicitly, (j, i). Requires |i - j| <= bandwidth.
  void add(std::size_t i, std::size_t j, double v);

  /// Banded Cholesky G = L L^T, kept next to the original entries. Throws
  /// FactorizationError when a pivot falls below kPivotThreshold.
  void factor();
  [[nodiscard]] bool factored() const { return factored_; }

  /// Solves G x = b for one or several right-hand sides; requires factor().
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  void solve_in_place(double* x, std::ptrdiff_t stride = 1) const;

  [[nodiscard]] Eigen::MatrixXd to_dense() const;
  /// Original (unfactored) matrix times x.
  [[nodiscard]] Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

  [[nodiscard]] double min_pivot() const { return min_pivot_; }

  static constexpr double kPivotThreshold = 1e-300;

 private:
  [[nodiscard]] double& band(std::size_t i, std::size_t d) { return bands_[i * (bw_ + 1) + d]; }
  [[nodiscard]] double band(std::size_t i, std::size_t d) const { return bands_[i * (bw_ + 1) + d]; }

  std::size_t dim_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> bands_;
  std::vector<double> chol_;
  bool factored_ = false;
  double min_pivot_ = 0.0;
};

}  // namespace splinemart
