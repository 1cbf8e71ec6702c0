#ifndef SEQKRIG_DESIGN_HPP
#define SEQKRIG_DESIGN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "seqkrig/errors.hpp"
#include "seqkrig/rng.hpp"

namespace seqkrig {

/// Two rows closer than this in max-coordinate distance count as duplicates.
inline constexpr double kDuplicateRowTol = 1e-12;

/// An n x m set of experimental points in the unit cube; rows are points.
/// Construction enforces the invariants: every coordinate in [0, 1], at
/// least one row and one column, rows pairwise distinct.
class DesignMatrix {
 public:
  explicit DesignMatrix(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw ArgumentError("design needs at least one row and one column");
    check_rows_in_unit_cube(points_);
    for (Eigen::Index i = 0; i < points_.rows(); ++i)
      for (Eigen::Index k = i + 1; k < points_.rows(); ++k)
        if ((points_.row(i) - points_.row(k)).cwiseAbs().maxCoeff() < kDuplicateRowTol)
          throw ArgumentError("duplicate design rows " + std::to_string(i) + " and " +
                              std::to_string(k));
  }

  int n() const { return static_cast<int>(points_.rows()); }
  int m() const { return static_cast<int>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::RowVectorXd row(int i) const { return points_.row(i); }

  /// Index of the row matching x under the duplicate tolerance, or -1.
  int find(const Eigen::RowVectorXd& x) const {
    if (x.size() != points_.cols()) throw ArgumentError("point dimension mismatch");
    for (Eigen::Index i = 0; i < points_.rows(); ++i)
      if ((points_.row(i) - x).cwiseAbs().maxCoeff() < kDuplicateRowTol)
        return static_cast<int>(i);
    return -1;
  }

  bool contains(const Eigen::RowVectorXd& x) const { return find(x) >= 0; }

  DesignMatrix appended(const Eigen::RowVectorXd& x) const {
    Eigen::MatrixXd one(1, x.size());
    one.row(0) = x;
    return appended_rows(one);
  }

  DesignMatrix appended_rows(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != points_.cols()) throw ArgumentError("appended rows dimension mismatch");
    check_rows_in_unit_cube(rows);
    for (Eigen::Index a = 0; a < rows.rows(); ++a) {
      if (contains(rows.row(a))) throw ArgumentError("appended row duplicates an existing row");
      for (Eigen::Index b = a + 1; b < rows.rows(); ++b)
        if ((rows.row(a) - rows.row(b)).cwiseAbs().maxCoeff() < kDuplicateRowTol)
          throw ArgumentError("appended rows contain duplicates");
    }
    Eigen::MatrixXd p(points_.rows() + rows.rows(), points_.cols());
    p.topRows(points_.rows()) = points_;
    p.bottomRows(rows.rows()) = rows;
    return DesignMatrix(std::move(p), Trusted{});
  }

  /// Rows at the given (distinct, in-range) indices, in the given order.
  DesignMatrix subset(const std::vector<int>& rows) const {
    if (rows.empty()) throw ArgumentError("subset needs at least one row");
    Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), points_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= n()) throw ArgumentError("subset row index out of range");
      p.row(static_cast<Eigen::Index>(i)) = points_.row(rows[i]);
    }
    return DesignMatrix(std::move(p), Trusted{});
  }

 private:
  struct Trusted {};
  DesignMatrix(Eigen::MatrixXd points, Trusted) : points_(std::move(points)) {}

  static void check_rows_in_unit_cube(const Eigen::MatrixXd& rows) {
    if (!rows.allFinite() || rows.minCoeff() < 0.0 || rows.maxCoeff() > 1.0)
      throw ArgumentError("design coordinates must lie in [0,1]");
  }

  Eigen::MatrixXd points_;

  friend DesignMatrix md_optimized_design(int, int, std::uint64_t, int, double,
                                          struct MdOptimTrace*);
};

struct Discrepancy {
  double md_squared = 0.0;
};

namespace detail {

// Factors of the mixture-discrepancy sums, with centered coordinates
// u = x - 0.5.  Both are bounded away from zero on [-0.5, 0.5].
inline double md_point_factor(double u) { return 5.0 / 3.0 - 0.25 * std::abs(u) - 0.25 * u * u; }

inline double md_pair_factor(double u, double v) {
  const double w = std::abs(u - v);
  return 15.0 / 8.0 - 0.25 * std::abs(u) - 0.25 * std::abs(v) - 0.75 * w + 0.5 * w * w;
}

inline double md_squared_raw(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  const int m = static_cast<int>(points.cols());
  const Eigen::MatrixXd c = points.array() - 0.5;
  double sum_p = 0.0;
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < m; ++j) p *= md_point_factor(c(i, j));
    sum_p += p;
  }
  double sum_q = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k <= i; ++k) {
      double q = 1.0;
      for (int j = 0; j < m; ++j) q *= md_pair_factor(c(i, j), c(k, j));
      sum_q += (k == i) ? q : 2.0 * q;
    }
  }
  const double nn = static_cast<double>(n);
  return std::pow(19.0 / 12.0, m) - 2.0 / nn * sum_p + sum_q / (nn * nn);
}

inline Eigen::MatrixXd lhs_points(Rng& rng, int n, int m) {
  Eigen::MatrixXd pts(n, m);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < m; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i)
      pts(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform01()) /
                  static_cast<double>(n);
  }
  return pts;
}

}  // namespace detail

/// Mixture discrepancy MD^2 of a design (lower is more uniform).
inline Discrepancy mixture_discrepancy(const DesignMatrix& design) {
  const double md2 = detail::md_squared_raw(design.points());
  if (md2 < -1e-12) throw NumericalError("mixture discrepancy evaluated below -1e-12");
  return Discrepancy{md2};
}

/// Random Latin hypercube: projected onto each axis, exactly one point falls
/// into each of the n bins [i/n, (i+1)/n). Deterministic for a given seed.
inline DesignMatrix latin_hypercube(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ArgumentError("latin_hypercube requires n >= 1 and m >= 1");
  Rng rng(seed);
  return DesignMatrix(detail::lhs_points(rng, n, m));
}

struct MdOptimTrace {
  /// Starting MD^2 followed by the MD^2 after each accepted exchange.
  std::vector<double> accepted_md2;
};

/// Space-filling design on the centered n-level lattice (level i maps to
/// coordinate (2i-1)/(2n)) found by threshold-accepting coordinate exchange
/// on MD^2: a move swaps two levels within one column. The result is never
/// worse than the best of 50 random Latin hypercubes drawn from the same
/// seed stream. budget = 0 returns the best initial lattice candidate
/// unmodified; threshold_scale = 0 degenerates to strict descent.
inline DesignMatrix md_optimized_design(int n, int m, std::uint64_t seed, int budget = 10000,
                                        double threshold_scale = 1.0,
                                        MdOptimTrace* trace = nullptr) {
  if (n < 2 || m < 1) throw ArgumentError("md_optimized_design requires n >= 2 and m >= 1");
  if (budget < 0) throw ArgumentError("budget must be nonnegative");
  Rng rng(seed);

  std::vector<double> levels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) levels[static_cast<std::size_t>(i)] = (2.0 * i + 1.0) / (2.0 * n);

  const int n_starts = 8;
  Eigen::MatrixXd cur;
  double cur_md2 = std::numeric_limits<double>::infinity();
  std::vector<double> column(static_cast<std::size_t>(n));
  for (int s = 0; s < n_starts; ++s) {
    Eigen::MatrixXd cand(n, m);
    for (int j = 0; j < m; ++j) {
      column = levels;
      rng.shuffle(column);
      for (int i = 0; i < n; ++i) cand(i, j) = column[static_cast<std::size_t>(i)];
    }
    const double md2 = detail::md_squared_raw(cand);
    if (md2 < cur_md2) {
      cur_md2 = md2;
      cur = std::move(cand);
    }
  }
  if (budget == 0) return DesignMatrix(std::move(cur), DesignMatrix::Trusted{});

  // Incremental state: per-row point products P, pairwise products Q.
  Eigen::MatrixXd c = cur.array() - 0.5;
  Eigen::VectorXd P(n);
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < m; ++j) p *= detail::md_point_factor(c(i, j));
    P(i) = p;
    for (int k = 0; k <= i; ++k) {
      double q = 1.0;
      for (int j = 0; j < m; ++j) q *= detail::md_pair_factor(c(i, j), c(k, j));
      Q(i, k) = Q(k, i) = q;
    }
  }
  const double nn = static_cast<double>(n);

  Eigen::VectorXd new_q1(n), new_q2(n);
  double new_p1 = 0.0, new_p2 = 0.0;
  // Swapping rows i1, i2 in one column leaves Q(i1, i2) unchanged (the pair
  // factor is symmetric in its arguments), so only the two rows move.
  auto propose = [&](int col, int i1, int i2) -> double {
    const double u = c(i1, col), v = c(i2, col);
    new_p1 = P(i1) / detail::md_point_factor(u) * detail::md_point_factor(v);
    new_p2 = P(i2) / detail::md_point_factor(v) * detail::md_point_factor(u);
    double dq = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i1 || k == i2) continue;
      const double w = c(k, col);
      new_q1(k) = Q(i1, k) / detail::md_pair_factor(u, w) * detail::md_pair_factor(v, w);
      new_q2(k) = Q(i2, k) / detail::md_pair_factor(v, w) * detail::md_pair_factor(u, w);
      dq += 2.0 * (new_q1(k) - Q(i1, k) + new_q2(k) - Q(i2, k));
    }
    new_q1(i1) = Q(i1, i1) / detail::md_pair_factor(u, u) * detail::md_pair_factor(v, v);
    new_q2(i2) = Q(i2, i2) / detail::md_pair_factor(v, v) * detail::md_pair_factor(u, u);
    new_q1(i2) = new_q2(i1) = Q(i1, i2);
    dq += new_q1(i1) - Q(i1, i1) + new_q2(i2) - Q(i2, i2);
    return -2.0 / nn * (new_p1 + new_p2 - P(i1) - P(i2)) + dq / (nn * nn);
  };
  auto apply = [&](int col, int i1, int i2) {
    std::swap(cur(i1, col), cur(i2, col));
    std::swap(c(i1, col), c(i2, col));
    P(i1) = new_p1;
    P(i2) = new_p2;
    for (int k = 0; k < n; ++k) {
      Q(i1, k) = Q(k, i1) = new_q1(k);
      Q(i2, k) = Q(k, i2) = new_q2(k);
    }
    Q(i1, i2) = Q(i2, i1) = new_q1(i2);
  };
  auto draw_move = [&](int& col, int& i1, int& i2) {
    col = static_cast<int>(rng.uniform_int(0, m - 1));
    i1 = static_cast<int>(rng.uniform_int(0, n - 1));
    i2 = static_cast<int>(rng.uniform_int(0, n - 2));
    if (i2 >= i1) ++i2;
  };

  // Threshold schedule scaled from a warm-up sample of move magnitudes.
  const int n_probe = 64;
  std::vector<double> probe;
  probe.reserve(n_probe);
  for (int t = 0; t < n_probe; ++t) {
    int col, i1, i2;
    draw_move(col, i1, i2);
    probe.push_back(std::abs(propose(col, i1, i2)));
  }
  std::nth_element(probe.begin(), probe.begin() + n_probe / 2, probe.end());
  const double tau0 = threshold_scale * probe[n_probe / 2];

  if (trace) trace->accepted_md2.push_back(cur_md2);
  Eigen::MatrixXd best = cur;
  double best_md2 = cur_md2;
  for (int t = 0; t < budget; ++t) {
    const double tau = tau0 * (1.0 - static_cast<double>(t + 1) / budget);
    int col, i1, i2;
    draw_move(col, i1, i2);
    const double delta = propose(col, i1, i2);
    if (delta < tau) {
      apply(col, i1, i2);
      cur_md2 += delta;
      if (trace) trace->accepted_md2.push_back(cur_md2);
      if (cur_md2 < best_md2) {
        best_md2 = cur_md2;
        best = cur;
      }
    }
  }
  best_md2 = detail::md_squared_raw(best);

  // Guarantee: never worse than the best of 50 random Latin hypercubes.
  Eigen::MatrixXd lhs_best;
  double lhs_best_md2 = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 50; ++s) {
    Eigen::MatrixXd cand = detail::lhs_points(rng, n, m);
    const double md2 = detail::md_squared_raw(cand);
    if (md2 < lhs_best_md2) {
      lhs_best_md2 = md2;
      lhs_best = std::move(cand);
    }
  }
  if (best_md2 <= lhs_best_md2) return DesignMatrix(std::move(best), DesignMatrix::Trusted{});
  return DesignMatrix(std::move(lhs_best), DesignMatrix::Trusted{});
}

}  // namespace seqkrig

#endif
