#ifndef SEQKRIG_KERNELS_HPP
#define SEQKRIG_KERNELS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"

namespace seqkrig {

enum class KernelFamily { GaussianSeparable, Matern };

/// Correlation function parameters. GaussianSeparable uses the per-axis
/// weights theta; Matern uses the smoothness nu and the scale phi_scale.
/// Both add the nugget g on exact (bitwise) point equality.
struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianSeparable;
  Eigen::VectorXd theta;
  double nu = 1.5;
  double phi_scale = 1.0;
  double nugget = 0.0;

  static KernelSpec gaussian(Eigen::VectorXd theta, double nugget = 0.0) {
    KernelSpec s;
    s.family = KernelFamily::GaussianSeparable;
    s.theta = std::move(theta);
    s.nugget = nugget;
    s.validate();
    return s;
  }

  static KernelSpec matern(double nu, double phi_scale, double nugget = 0.0) {
    KernelSpec s;
    s.family = KernelFamily::Matern;
    s.nu = nu;
    s.phi_scale = phi_scale;
    s.nugget = nugget;
    s.validate();
    return s;
  }

  void validate() const {
    if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw ArgumentError("nugget must be >= 0");
    if (family == KernelFamily::GaussianSeparable) {
      if (theta.size() < 1) throw ArgumentError("gaussian kernel needs at least one theta");
      if (!((theta.array() > 0.0).all()) || !theta.allFinite())
        throw ArgumentError("theta entries must be positive");
    } else {
      if (!(nu > 0.0) || !std::isfinite(nu)) throw ArgumentError("matern nu must be positive");
      if (!(phi_scale > 0.0) || !std::isfinite(phi_scale))
        throw ArgumentError("matern phi must be positive");
    }
  }
};

namespace detail {

inline bool exactly_equal(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
  return (x.array() == y.array()).all();
}

/// Matern correlation (2 sqrt(nu) phi r)^nu K_nu(...) / (Gamma(nu) 2^(nu-1)),
/// continuous at r = 0 with value 1.
inline double matern_correlation(double nu, double phi, double r) {
  const double z = 2.0 * std::sqrt(nu) * phi * r;
  if (z < 1e-12) return 1.0;
  return std::pow(z, nu) * std::cyl_bessel_k(nu, z) / (std::tgamma(nu) * std::pow(2.0, nu - 1.0));
}

inline void check_point_dims(const KernelSpec& spec, const Eigen::RowVectorXd& x,
                             const Eigen::RowVectorXd& y) {
  if (x.size() != y.size()) throw ArgumentError("points have different dimensions");
  if (spec.family == KernelFamily::GaussianSeparable && spec.theta.size() != x.size())
    throw ArgumentError("point dimension does not match theta");
}

}  // namespace detail

inline double correlation(const KernelSpec& spec, const Eigen::RowVectorXd& x,
                          const Eigen::RowVectorXd& y) {
  detail::check_point_dims(spec, x, y);
  double k;
  if (spec.family == KernelFamily::GaussianSeparable) {
    const double s = ((x - y).array().square() * spec.theta.transpose().array()).sum();
    k = std::exp(-s);
  } else {
    k = detail::matern_correlation(spec.nu, spec.phi_scale, (x - y).norm());
  }
  if (spec.nugget != 0.0 && detail::exactly_equal(x, y)) k += spec.nugget;
  return k;
}

/// Vector r(x): correlations between x and every design row.
inline Eigen::VectorXd cross_correlations(const KernelSpec& spec, const Eigen::RowVectorXd& x,
                                          const DesignMatrix& design) {
  if (spec.family == KernelFamily::GaussianSeparable && spec.theta.size() != design.m())
    throw ArgumentError("design dimension does not match theta");
  if (x.size() != design.m()) throw ArgumentError("point dimension does not match design");
  const Eigen::MatrixXd diff = design.points().rowwise() - x;
  Eigen::VectorXd r(design.n());
  if (spec.family == KernelFamily::GaussianSeparable) {
    r = (-(diff.array().square().matrix() * spec.theta).array()).exp();
  } else {
    for (int i = 0; i < design.n(); ++i)
      r(i) = detail::matern_correlation(spec.nu, spec.phi_scale, diff.row(i).norm());
  }
  if (spec.nugget != 0.0)
    for (int i = 0; i < design.n(); ++i)
      if (detail::exactly_equal(x, design.row(i))) r(i) += spec.nugget;
  return r;
}

/// m x n Jacobian of r(x): entry (i, j) is d k(x, x_j) / d x_i. The nugget
/// contributes zero (its derivative is defined as zero everywhere).
/// Supported for GaussianSeparable and for Matern with nu > 1.
inline Eigen::MatrixXd cross_correlation_jacobian(const KernelSpec& spec,
                                                  const Eigen::RowVectorXd& x,
                                                  const DesignMatrix& design) {
  if (x.size() != design.m()) throw ArgumentError("point dimension does not match design");
  const int n = design.n(), m = design.m();
  const Eigen::MatrixXd diff = design.points().rowwise() - x;  // x_j - x
  Eigen::MatrixXd jac(m, n);
  if (spec.family == KernelFamily::GaussianSeparable) {
    if (spec.theta.size() != m) throw ArgumentError("design dimension does not match theta");
    const Eigen::VectorXd k = (-(diff.array().square().matrix() * spec.theta).array()).exp();
    for (int j = 0; j < n; ++j)
      jac.col(j) = 2.0 * k(j) * spec.theta.array() * diff.row(j).transpose().array();
  } else {
    if (!(spec.nu > 1.0))
      throw UnsupportedOperationError("matern gradient requires nu > 1");
    const double a = 2.0 * std::sqrt(spec.nu) * spec.phi_scale;
    const double coef = a * a / (std::tgamma(spec.nu) * std::pow(2.0, spec.nu - 1.0));
    // d k / d x_i = coef * z^(nu-1) K_(nu-1)(z) * (x_j - x)_i with z = a * r.
    const double near_zero = std::tgamma(spec.nu - 1.0) * std::pow(2.0, spec.nu - 2.0);
    for (int j = 0; j < n; ++j) {
      const double r = diff.row(j).norm();
      const double z = a * r;
      const double factor =
          z < 1e-12 ? near_zero : std::pow(z, spec.nu - 1.0) * std::cyl_bessel_k(spec.nu - 1.0, z);
      jac.col(j) = coef * factor * diff.row(j).transpose();
    }
  }
  return jac;
}

/// Diagonal of the second-derivative kernel d^2 k / (dx_i dy_i) at y = x:
/// 2 theta_i for the separable Gaussian, independent of x. Nugget excluded.
inline Eigen::VectorXd second_derivative_diagonal(const KernelSpec& spec) {
  if (spec.family != KernelFamily::GaussianSeparable)
    throw UnsupportedOperationError("second derivative diagonal is gaussian-only");
  return 2.0 * spec.theta;
}

/// n x n correlation matrix K(X); diagonal entries are 1 + g.
inline Eigen::MatrixXd correlation_matrix(const KernelSpec& spec, const DesignMatrix& design) {
  const int n = design.n();
  if (spec.family == KernelFamily::GaussianSeparable && spec.theta.size() != design.m())
    throw ArgumentError("design dimension does not match theta");
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = 1.0 + spec.nugget;
    for (int k = i + 1; k < n; ++k) {
      double v;
      if (spec.family == KernelFamily::GaussianSeparable) {
        const double s = ((design.points().row(i) - design.points().row(k)).array().square() *
                          spec.theta.transpose().array())
                             .sum();
        v = std::exp(-s);
      } else {
        v = detail::matern_correlation(spec.nu, spec.phi_scale,
                                       (design.points().row(i) - design.points().row(k)).norm());
      }
      K(i, k) = K(k, i) = v;
    }
  }
  return K;
}

}  // namespace seqkrig

#endif
