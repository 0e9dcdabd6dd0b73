#include "splinemart/gram.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "splinemart/error.hpp"
#include "splinemart/quadrature.hpp"

namespace splinemart {

BandedSPDMatrix gram_matrix(const SplineSpace& space) {
  const auto k = static_cast<std::size_t>(space.order());
  BandedSPDMatrix g(space.dimension(), k - 1);
  const auto& rule = gauss_legendre(nodes_for_degree(2 * k - 2));
  const auto& spans = space.spans();
  for (std::size_t s = 0; s < spans.size(); ++s) {
    for_each_offset(spans[s].lo, 0.0, spans[s].length(), rule, 1, [&](double, double off, double w) {
      const auto b = eval_basis_in_span(space, s, off);
      for (std::size_t r = 0; r < b.count; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
          g.add(b.first + r, b.first + c, w * b.values[r] * b.values[c]);
        }
      }
    });
  }
  return g;
}

DualBasis::DualBasis(SplineSpace space) : space_(std::move(space)), gram_(gram_matrix(space_)) {
  gram_.factor();
  if (space_.dimension() <= kDenseDualLimit) {
    const auto n = static_cast<Eigen::Index>(space_.dimension());
    Eigen::MatrixXd a = gram_.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
    // Symmetrize the round-off so that A is exactly symmetric.
    dense_ = 0.5 * (a + a.transpose());
  }
}

const Eigen::MatrixXd& DualBasis::dense() const {
  if (!dense_) throw Error("dense dual matrix not available above dimension " +
                           std::to_string(kDenseDualLimit));
  return *dense_;
}

Eigen::VectorXd DualBasis::row(std::size_t i) const {
  if (dense_) return dense_->row(static_cast<Eigen::Index>(i)).transpose();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  e[static_cast<Eigen::Index>(i)] = 1.0;
  return gram_.solve(e);
}

double DualBasis::coefficient(std::size_t i, std::size_t j) const {
  if (dense_) return (*dense_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return row(i)[static_cast<Eigen::Index>(j)];
}

double DualBasis::eval(std::size_t i, double t) const {
  const auto b = eval_basis(space_, t);
  if (b.count == 0) return 0.0;
  double s = 0.0;
  if (dense_) {
    for (std::size_t r = 0; r < b.count; ++r) {
      s += b.values[r] * (*dense_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b.first + r));
    }
    return s;
  }
  const Eigen::VectorXd a = row(i);
  for (std::size_t r = 0; r < b.count; ++r) s += b.values[r] * a[static_cast<Eigen::Index>(b.first + r)];
  return s;
}

Eigen::VectorXd DualBasis::eval_all(double t) const {
  // N_i*(t) = sum_j a_ij N_j(t) = (G^{-1} v)_i with v_j = N_j(t).
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  const auto b = eval_basis(space_, t);
  for (std::size_t r = 0; r < b.count; ++r) v[static_cast<Eigen::Index>(b.first + r)] = b.values[r];
  if (dense_) return *dense_ * v;
  return gram_.solve(v);
}

Eigen::MatrixXd dual_coefficients(const SplineSpace& space) {
  DualBasis d(space);
  if (d.has_dense()) return d.dense();
  const auto n = static_cast<Eigen::Index>(space.dimension());
  return d.solve(Eigen::MatrixXd::Identity(n, n));
}

double eval_dual(const DualBasis& duals, std::size_t i, double t) { return duals.eval(i, t); }

namespace {

std::vector<double> offset_maxima(const DualBasis& duals) {
  const auto& space = duals.space();
  const std::size_t n = duals.dimension();
  std::vector<double> m(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd a = duals.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::abs(a[static_cast<Eigen::Index>(j)]) * space.hull(i, j);
      m[j - i] = std::max(m[j - i], v);
    }
  }
  return m;
}

std::size_t contiguous_kept(const std::vector<double>& m, double floor) {
  std::size_t last = 0;
  while (last + 1 < m.size() && m[last + 1] >= floor) ++last;
  return last;
}

}  // namespace

DecayFit fit_decay(const DualBasis& duals, double noise_floor) {
  const int k = duals.space().order();
  if (k > 1 && duals.dimension() <= static_cast<std::size_t>(k)) {
    throw Error("fit_decay needs dim > k to have off-band offsets");
  }
  DecayFit fit;
  fit.offset_max = offset_maxima(duals);
  const std::size_t last = contiguous_kept(fit.offset_max, noise_floor);
  fit.kept = last + 1;
  fit.residuals.assign(fit.offset_max.size(), std::numeric_limits<double>::quiet_NaN());

  if (last == 0) {
    // Diagonal inverse (k = 1): nothing decays, q is zero.
    fit.q_hat = 0.0;
    fit.C_hat = fit.offset_max[0];
    fit.residuals[0] = fit.offset_max[0];
    return fit;
  }

  fit.fit_hi = last;
  fit.fit_lo = last >= 2 ? last / 2 : 0;
  if (fit.fit_hi - fit.fit_lo < 1) fit.fit_lo = fit.fit_hi - 1;
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  const auto cnt = static_cast<double>(fit.fit_hi - fit.fit_lo + 1);
  for (std::size_t m = fit.fit_lo; m <= fit.fit_hi; ++m) {
    const auto x = static_cast<double>(m);
    const double y = std::log(fit.offset_max[m]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  fit.q_hat = std::exp(slope);
  for (std::size_t m = 0; m <= last; ++m) {
    fit.residuals[m] = fit.offset_max[m] / std::pow(fit.q_hat, static_cast<double>(m));
    fit.C_hat = std::max(fit.C_hat, fit.residuals[m]);
  }
  return fit;
}

DecayFit fit_decay(const SplineSpace& space, double noise_floor) {
  return fit_decay(DualBasis(space), noise_floor);
}

double decay_constant(const DualBasis& duals, double q, double noise_floor) {
  const auto m = offset_maxima(duals);
  const std::size_t last = contiguous_kept(m, noise_floor);
  double c = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    c = std::max(c, i == 0 ? m[0] : m[i] / std::pow(q, static_cast<double>(i)));
  }
  return c;
}

std::string decay_csv_header() { return "k,n,grid_family,q_hat,C_hat,max_residual"; }

std::string decay_csv_row(const DecayFit& fit, int order, std::size_t n,
                          const std::string& family) {
  std::ostringstream os;
  os << std::setprecision(17) << order << ',' << n << ',' << family << ',' << fit.q_hat << ','
     << fit.C_hat << ',' << fit.max_residual();
  return os.str();
}

}  // namespace splinemart
