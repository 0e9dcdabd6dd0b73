#include "splinemart/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "splinemart/error.hpp"

namespace splinemart {

BandedSPDMatrix::BandedSPDMatrix(std::size_t dim, std::size_t bandwidth)
    : dim_(dim), bw_(bandwidth), bands_(dim * (bandwidth + 1), 0.0) {}

double BandedSPDMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return band(i, i - j);
}

void BandedSPDMatrix::add(std::size_t i, std::size_t j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > bw_ || i >= dim_) throw Error("banded matrix entry outside the band");
  band(i, i - j) += v;
  factored_ = false;
}

void BandedSPDMatrix::factor() {
  chol_ = bands_;
  const std::size_t w = bw_ + 1;
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j <= i; ++j) {
      // L(i,j) = (G(i,j) - sum_{l<j} L(i,l) L(j,l)) / L(j,j)
      double s = chol_[i * w + (i - j)];
      const std::size_t l0 = std::max(j0, j > bw_ ? j - bw_ : 0);
      for (std::size_t l = l0; l < j; ++l) s -= chol_[i * w + (i - l)] * chol_[j * w + (j - l)];
      if (j == i) {
        if (!(s > kPivotThreshold)) {
          throw FactorizationError("Cholesky pivot " + std::to_string(s) + " at row " +
                                   std::to_string(i));
        }
        min_pivot_ = std::min(min_pivot_, s);
        chol_[i * w] = std::sqrt(s);
      } else {
        chol_[i * w + (i - j)] = s / chol_[j * w];
      }
    }
  }
  factored_ = true;
}

void BandedSPDMatrix::solve_in_place(double* x, std::ptrdiff_t stride) const {
  if (!factored_) throw Error("solve() called before factor()");
  const std::size_t w = bw_ + 1;
  auto at = [&](std::size_t i) -> double& { return x[static_cast<std::ptrdiff_t>(i) * stride]; };
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = at(i);
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j < i; ++j) s -= chol_[i * w + (i - j)] * at(j);
    at(i) = s / chol_[i * w];
  }
  for (std::size_t ii = dim_; ii-- > 0;) {
    double s = at(ii);
    const std::size_t j1 = std::min(dim_ - 1, ii + bw_);
    for (std::size_t j = ii + 1; j <= j1; ++j) s -= chol_[j * w + (j - ii)] * at(j);
    at(ii) = s / chol_[ii * w];
  }
}

Eigen::VectorXd BandedSPDMatrix::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  solve_in_place(x.data());
  return x;
}

Eigen::MatrixXd BandedSPDMatrix::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd x = b;
  for (Eigen::Index c = 0; c < x.cols(); ++c) solve_in_place(x.col(c).data());
  return x;
}

Eigen::MatrixXd BandedSPDMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t d = 0; d <= std::min(bw_, i); ++d) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(i - d);
      m(r, c) = band(i, d);
      m(c, r) = band(i, d);
    }
  }
  return m;
}

Eigen::VectorXd BandedSPDMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    y[r] += band(i, 0) * x[r];
    for (std::size_t d = 1; d <= std::min(bw_, i); ++d) {
      const auto c = static_cast<Eigen::Index>(i - d);
      y[r] += band(i, d) * x[c];
      y[c] += band(i, d) * x[r];
    }
  }
  return y;
}

}  // namespace splinemart
