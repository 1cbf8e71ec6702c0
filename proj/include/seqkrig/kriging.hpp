#ifndef SEQKRIG_KRIGING_HPP
#define SEQKRIG_KRIGING_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"
#include "seqkrig/kernels.hpp"
#include "seqkrig/parallel.hpp"
#include "seqkrig/rng.hpp"

namespace seqkrig {

struct FitOptions {
  int n_starts = 5;
  int max_sweeps = 4;
  int scan_points = 11;        // coarse grid per coordinate
  int golden_iterations = 18;  // bracket refinement per coordinate
  double theta_lo = 1e-3, theta_hi = 1e3;
  double nugget_lo = 1e-8, nugget_hi = 1.0;
  double matern_nu = 1.5;    // smoothness held fixed when fitting Matern
  bool center_mean = false;  // subtract the response mean before fitting
};

/// Zero-mean (simple) Kriging surrogate: predictor r(x)' K^-1 Y and
/// variance tau^2 (k(x,x) - r(x)' K^-1 r(x)). Immutable once built; all
/// prediction methods are const and safe to call concurrently.
class KrigingModel {
 public:
  /// Builds the model for fully specified hyperparameters. tau2 defaults to
  /// the profile estimate Y' K^-1 Y / n (Y centered by `mean`). If the
  /// correlation matrix cannot be factorized, the nugget is raised in
  /// decades up to 1e-2 before a NumericalError is thrown; the number of
  /// escalations is recorded on the model.
  static KrigingModel with_hyperparameters(DesignMatrix design, Eigen::VectorXd observations,
                                           KernelSpec kernel,
                                           std::optional<double> tau_squared = {},
                                           double mean = 0.0) {
    if (observations.size() != design.n())
      throw ArgumentError("observation count does not match design rows");
    kernel.validate();
    const int n = design.n();
    const Eigen::VectorXd yc = observations.array() - mean;

    int escalations = 0;
    Eigen::MatrixXd K;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
      K = correlation_matrix(kernel, design);
      llt.compute(K);
      if (llt.info() == Eigen::Success) break;
      const double g = std::max(kernel.nugget, 1e-8) * 10.0;
      if (g > 1e-2 * (1.0 + 1e-12))
        throw NumericalError("correlation matrix not positive definite at nugget 1e-2");
      kernel.nugget = g;
      ++escalations;
    }

    Eigen::VectorXd z = llt.solve(yc);
    for (int it = 0; it < 2; ++it) {
      const Eigen::VectorXd resid = yc - K * z;
      z += llt.solve(resid);
    }
    double quad = yc.dot(z);
    if (quad < 0.0) quad = 0.0;
    const double tau2 = tau_squared ? *tau_squared : quad / n;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double tau2_safe = std::max(tau2, 1e-300);
    const double ratio = quad == 0.0 ? 0.0 : quad / tau2_safe;
    const double ll =
        -0.5 * (n * std::log(2.0 * std::numbers::pi * tau2_safe) + logdet + ratio);

    KrigingModel model(std::move(design), std::move(observations), std::move(kernel));
    model.mean_ = mean;
    model.tau_squared_ = tau2;
    model.chol_lower_ = llt.matrixL();
    model.kinv_y_ = std::move(z);
    model.log_likelihood_ = ll;
    model.nugget_escalations_ = escalations;
    return model;
  }

  int n() const { return design_.n(); }
  int m() const { return design_.m(); }
  const DesignMatrix& design() const { return design_; }
  const Eigen::VectorXd& observations() const { return observations_; }
  const KernelSpec& kernel() const { return kernel_; }
  double tau_squared() const { return tau_squared_; }
  double mean() const { return mean_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  const Eigen::VectorXd& kinv_y() const { return kinv_y_; }
  double log_likelihood() const { return log_likelihood_; }
  int nugget_escalations() const { return nugget_escalations_; }

  double predict(const Eigen::RowVectorXd& x) const {
    const Eigen::VectorXd r = cross_correlations(kernel_, x, design_);
    return mean_ + r.dot(kinv_y_);
  }

  /// k(x,x) - r' K^-1 r, the tau^2-free part of the prediction variance.
  /// Tiny negative round-off (> -1e-10) clamps to zero; anything lower
  /// signals a broken factorization.
  double unscaled_prediction_variance(const Eigen::RowVectorXd& x) const {
    const Eigen::VectorXd r = cross_correlations(kernel_, x, design_);
    const Eigen::VectorXd v =
        chol_lower_.triangularView<Eigen::Lower>().solve(r);
    const double kxx = correlation(kernel_, x, x);
    double u = kxx - v.squaredNorm();
    if (u < 0.0) {
      if (u <= -1e-10) throw NumericalError("prediction variance below round-off tolerance");
      u = 0.0;
    }
    return u;
  }

  double predict_variance(const Eigen::RowVectorXd& x) const {
    return tau_squared_ * unscaled_prediction_variance(x);
  }

  Eigen::VectorXd predict_gradient(const Eigen::RowVectorXd& x) const {
    return cross_correlation_jacobian(kernel_, x, design_) * kinv_y_;
  }

  /// Diagonal g_i(x) of the posterior gradient covariance kernel,
  /// 2 theta_i - (J K^-1 J')_ii, clamped at zero on round-off negatives.
  Eigen::VectorXd gradient_variance_diagonal(const Eigen::RowVectorXd& x) const {
    return gradient_core(x).second;
  }

  /// E ||grad f(x)||^2 = ||grad yhat(x)||^2 + tau^2 sum_i g_i(x).
  double gradient_norm_expectation(const Eigen::RowVectorXd& x) const {
    const auto [grad, gvd] = gradient_core(x);
    return grad.squaredNorm() + tau_squared_ * gvd.sum();
  }

 private:
  KrigingModel(DesignMatrix design, Eigen::VectorXd observations, KernelSpec kernel)
      : design_(std::move(design)),
        observations_(std::move(observations)),
        kernel_(std::move(kernel)) {}

  std::pair<Eigen::VectorXd, Eigen::VectorXd> gradient_core(const Eigen::RowVectorXd& x) const {
    const Eigen::MatrixXd jac = cross_correlation_jacobian(kernel_, x, design_);
    const Eigen::VectorXd prior = second_derivative_diagonal(kernel_);
    const Eigen::MatrixXd w =
        chol_lower_.triangularView<Eigen::Lower>().solve(jac.transpose());
    Eigen::VectorXd gvd(m());
    for (int i = 0; i < m(); ++i) {
      double v = prior(i) - w.col(i).squaredNorm();
      const double tol = 1e-10 * std::max(1.0, prior(i));
      if (v < -tol) throw NumericalError("negative gradient variance diagonal");
      gvd(i) = std::max(v, 0.0);
    }
    return {jac * kinv_y_, std::move(gvd)};
  }

  DesignMatrix design_;
  Eigen::VectorXd observations_;
  KernelSpec kernel_;
  double mean_ = 0.0;
  double tau_squared_ = 0.0;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd kinv_y_;
  double log_likelihood_ = 0.0;
  int nugget_escalations_ = 0;
};

/// Maximum-likelihood fit of the kernel hyperparameters: multi-start
/// bounded coordinate search on the profile log-likelihood, log-scaled
/// parameters, deterministic for a given seed. A warm start (e.g. the
/// previous round's optimum) replaces the first start point.
inline KrigingModel fit(const DesignMatrix& design, const Eigen::VectorXd& observations,
                        KernelFamily family, std::uint64_t seed,
                        const std::optional<KernelSpec>& warm_start = {},
                        const FitOptions& options = {}) {
  if (observations.size() != design.n())
    throw ArgumentError("observation count does not match design rows");
  if (design.n() < 2) throw ArgumentError("fit requires at least two observations");
  const int n = design.n(), m = design.m();
  const double mean = options.center_mean ? observations.mean() : 0.0;
  const Eigen::VectorXd yc = observations.array() - mean;

  // Pairwise structure shared by every likelihood evaluation.
  const int npairs = n * (n - 1) / 2;
  Eigen::MatrixXd d2(npairs, m);
  Eigen::VectorXd dist(npairs);
  {
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k, ++idx) {
        d2.row(idx) = (design.points().row(i) - design.points().row(k)).array().square();
        dist(idx) = std::sqrt(d2.row(idx).sum());
      }
  }

  const bool gauss = family == KernelFamily::GaussianSeparable;
  const int dim = gauss ? m + 1 : 2;
  Eigen::VectorXd lo(dim), hi(dim);
  if (gauss) {
    lo.head(m).setConstant(std::log(options.theta_lo));
    hi.head(m).setConstant(std::log(options.theta_hi));
  } else {
    lo(0) = std::log(options.theta_lo);
    hi(0) = std::log(options.theta_hi);
  }
  lo(dim - 1) = std::log(options.nugget_lo);
  hi(dim - 1) = std::log(options.nugget_hi);

  auto spec_of = [&](const Eigen::VectorXd& p) {
    if (gauss) return KernelSpec::gaussian(p.head(m).array().exp(), std::exp(p(m)));
    return KernelSpec::matern(options.matern_nu, std::exp(p(0)), std::exp(p(1)));
  };

  Eigen::MatrixXd K(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd corr(npairs);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto loglik = [&](const Eigen::VectorXd& p) -> double {
    double g;
    if (gauss) {
      corr = (-(d2 * p.head(m).array().exp().matrix()).array()).exp();
      g = std::exp(p(m));
    } else {
      const double phi = std::exp(p(0));
      g = std::exp(p(1));
      for (int i = 0; i < npairs; ++i)
        corr(i) = detail::matern_correlation(options.matern_nu, phi, dist(i));
    }
    int idx = 0;
    for (int i = 0; i < n; ++i) {
      K(i, i) = 1.0 + g;
      for (int k = i + 1; k < n; ++k, ++idx) K(i, k) = K(k, i) = corr(idx);
    }
    llt.compute(K);
    if (llt.info() != Eigen::Success) return neg_inf;
    double quad = yc.dot(llt.solve(yc));
    if (quad < 0.0) quad = 0.0;
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (n * std::log(std::max(quad / n, 1e-300)) + logdet + n);
  };

  Rng rng(seed);
  Eigen::VectorXd best_p;
  double best_ll = neg_inf;
  const double golden = 0.6180339887498949;
  for (int s = 0; s < options.n_starts; ++s) {
    Eigen::VectorXd p(dim);
    if (s == 0) {
      if (warm_start && warm_start->family == family &&
          (!gauss || warm_start->theta.size() == m)) {
        if (gauss)
          p.head(m) = warm_start->theta.array().log();
        else
          p(0) = std::log(warm_start->phi_scale);
        p(dim - 1) = std::log(std::max(warm_start->nugget, options.nugget_lo));
      } else {
        if (gauss)
          p.head(m).setConstant(std::log(10.0));
        else
          p(0) = 0.0;
        p(dim - 1) = std::log(1e-6);
      }
      p = p.cwiseMax(lo).cwiseMin(hi);
    } else {
      for (int c = 0; c < dim; ++c) p(c) = rng.uniform(lo(c), hi(c));
    }

    double cur = loglik(p);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      const double sweep_start = cur;
      for (int c = 0; c < dim; ++c) {
        double best_x = p(c), best_v = cur;
        Eigen::VectorXd q = p;
        const double step = (hi(c) - lo(c)) / (options.scan_points - 1);
        for (int k = 0; k < options.scan_points; ++k) {
          q(c) = lo(c) + k * step;
          const double v = loglik(q);
          if (v > best_v) {
            best_v = v;
            best_x = q(c);
          }
        }
        double a = std::max(lo(c), best_x - step), b = std::min(hi(c), best_x + step);
        double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
        q(c) = x1;
        double f1 = loglik(q);
        q(c) = x2;
        double f2 = loglik(q);
        for (int it = 0; it < options.golden_iterations; ++it) {
          if (f1 > best_v) {
            best_v = f1;
            best_x = x1;
          }
          if (f2 > best_v) {
            best_v = f2;
            best_x = x2;
          }
          if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            q(c) = x2;
            f2 = loglik(q);
          } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            q(c) = x1;
            f1 = loglik(q);
          }
        }
        if (f1 > best_v) {
          best_v = f1;
          best_x = x1;
        }
        if (f2 > best_v) {
          best_v = f2;
          best_x = x2;
        }
        if (best_v > cur) {
          cur = best_v;
          p(c) = best_x;
        }
      }
      if (!(cur - sweep_start > 1e-7 * (1.0 + std::abs(cur)))) break;
    }
    if (cur > best_ll) {
      best_ll = cur;
      best_p = p;
    }
  }
  if (!(best_ll > neg_inf))
    throw NumericalError("likelihood evaluation failed for every start point");
  return KrigingModel::with_hyperparameters(design, observations, spec_of(best_p), {}, mean);
}

/// RMSE and max absolute error of the model against known values on a
/// fixed test matrix.
inline std::pair<double, double> prediction_errors(const KrigingModel& model,
                                                   const DesignMatrix& test_matrix,
                                                   const Eigen::VectorXd& truth, int jobs = 1) {
  if (truth.size() != test_matrix.n())
    throw ArgumentError("truth vector does not match the test matrix");
  const int n = test_matrix.n();
  Eigen::VectorXd err(n);
  parallel_for(0, n, jobs,
               [&](int i) { err(i) = model.predict(test_matrix.row(i)) - truth(i); });
  const double rmse = std::sqrt(err.squaredNorm() / n);
  const double mae = err.cwiseAbs().maxCoeff();
  return {rmse, mae};
}

}  // namespace seqkrig

#endif
