#ifndef SEQKRIG_BATCH_HPP
#define SEQKRIG_BATCH_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"

namespace seqkrig {

struct ClusterParams {
  int b = 1;                 // batch size
  int alpha = 15;            // box-count threshold for singleton clusters
  double beta = 5.0;         // centroid-distance multiplier for grown clusters
  double alpha_decay = 0.5;  // applied (rounded down, floor 1) when fewer than b clusters form

  void validate() const {
    if (b < 1) throw ArgumentError("batch size b must be >= 1");
    if (alpha < 1) throw ArgumentError("alpha must be >= 1");
    if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
    if (!(alpha_decay > 0.0) || !(alpha_decay < 1.0))
      throw ArgumentError("alpha_decay must lie in (0,1)");
  }
};

/// Ordered clusters of candidate indices plus the selected batch (first
/// point of each cluster). Within a cluster, indices appear in insertion
/// order, i.e. descending score.
struct ClusterPartition {
  std::vector<std::vector<int>> clusters;
  std::vector<int> batch;
  int alpha_used = 0;
  bool fallback = false;
};

/// Raised when the alpha decay hits its floor without producing b clusters;
/// carries the partial partition of the final pass.
class BatchFallbackError : public Error {
 public:
  BatchFallbackError(const std::string& msg, ClusterPartition partial)
      : Error(msg), partial_(std::move(partial)) {}
  const ClusterPartition& partial() const { return partial_; }

 private:
  ClusterPartition partial_;
};

namespace detail {

/// Candidate indices ordered by score descending, ties by lowest index.
inline std::vector<int> score_order(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  return order;
}

/// Number of candidate rows inside the closed axis-aligned box spanned by
/// rows `a` and `b` (both endpoints count).
inline int box_count(const Eigen::MatrixXd& pts, int a, int b) {
  const int n = static_cast<int>(pts.rows());
  const int m = static_cast<int>(pts.cols());
  int count = 0;
  for (int i = 0; i < n; ++i) {
    bool inside = true;
    for (int j = 0; j < m; ++j) {
      const double lo = std::min(pts(a, j), pts(b, j));
      const double hi = std::max(pts(a, j), pts(b, j));
      if (pts(i, j) < lo || pts(i, j) > hi) {
        inside = false;
        break;
      }
    }
    if (inside) ++count;
  }
  return count;
}

/// One clustering pass over the candidates in descending-score order.
/// Walks until b clusters exist or the candidates run out. Membership
/// tests iterate clusters in creation order; the first passing cluster
/// absorbs the point. A grown cluster absorbs when the centroid distance
/// is strictly below beta times the mean member-to-centroid distance; a
/// singleton absorbs when the closed box spanned with its point holds at
/// most alpha candidates.
inline std::vector<std::vector<int>> cluster_pass(const Eigen::MatrixXd& pts,
                                                  const std::vector<int>& order, int alpha,
                                                  double beta, int b) {
  const int m = static_cast<int>(pts.cols());
  std::vector<std::vector<int>> clusters;
  clusters.push_back({order[0]});
  for (std::size_t t = 1; t < order.size(); ++t) {
    if (static_cast<int>(clusters.size()) == b) break;
    const int idx = order[t];
    bool assigned = false;
    for (auto& cluster : clusters) {
      if (cluster.size() > 1) {
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(m);
        for (int member : cluster) centroid += pts.row(member);
        centroid /= static_cast<double>(cluster.size());
        double dbar = 0.0;
        for (int member : cluster) dbar += (pts.row(member) - centroid).norm();
        dbar /= static_cast<double>(cluster.size());
        const double d = (pts.row(idx) - centroid).norm();
        if (d < beta * dbar) {
          cluster.push_back(idx);
          assigned = true;
          break;
        }
      }
      if (cluster.size() == 1) {
        if (box_count(pts, cluster.front(), idx) <= alpha) {
          cluster.push_back(idx);
          assigned = true;
          break;
        }
      }
    }
    if (!assigned) clusters.push_back({idx});
  }
  return clusters;
}

/// Greedy top-b selection under a minimum pairwise-distance constraint,
/// relaxed (halved) until b points fit. Keeps the global argmax first.
inline std::vector<int> greedy_top_distinct(const Eigen::MatrixXd& pts,
                                            const std::vector<int>& order, int b) {
  const int n = static_cast<int>(pts.rows());
  double dmin = 0.0;
  for (int i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
      if (k != i) nearest = std::min(nearest, (pts.row(i) - pts.row(k)).norm());
    dmin += nearest;
  }
  dmin /= n;
  for (;;) {
    std::vector<int> picked;
    for (int idx : order) {
      bool ok = true;
      for (int sel : picked)
        if ((pts.row(idx) - pts.row(sel)).norm() < dmin) {
          ok = false;
          break;
        }
      if (ok) picked.push_back(idx);
      if (static_cast<int>(picked.size()) == b) return picked;
    }
    dmin *= 0.5;
  }
}

}  // namespace detail

/// Clustered top-b selection: rank the candidates by score, grow clusters
/// by the box-count (alpha) and centroid-distance (beta) rules, and return
/// the top point of each of the first b clusters. When a full pass yields
/// fewer than b clusters, alpha decays (floor 1) and the pass restarts;
/// if the floor still fails, a BatchFallbackError carries the partial
/// partition.
inline ClusterPartition select_batch(const DesignMatrix& candidates,
                                     const Eigen::VectorXd& scores, const ClusterParams& params) {
  params.validate();
  if (scores.size() != candidates.n())
    throw ArgumentError("score count does not match candidates");
  if (!scores.allFinite()) throw ArgumentError("candidate scores must be finite");
  if (candidates.n() < params.b)
    throw ArgumentError("fewer candidates than batch size");

  const std::vector<int> order = detail::score_order(scores);
  int alpha = params.alpha;
  for (;;) {
    auto clusters = detail::cluster_pass(candidates.points(), order, alpha, params.beta, params.b);
    if (static_cast<int>(clusters.size()) == params.b) {
      ClusterPartition part;
      part.batch.reserve(static_cast<std::size_t>(params.b));
      for (const auto& cluster : clusters) part.batch.push_back(cluster.front());
      part.clusters = std::move(clusters);
      part.alpha_used = alpha;
      return part;
    }
    if (alpha == 1) {
      ClusterPartition partial;
      for (const auto& cluster : clusters) partial.batch.push_back(cluster.front());
      partial.clusters = std::move(clusters);
      partial.alpha_used = alpha;
      throw BatchFallbackError("alpha decay reached its floor with fewer than b clusters",
                               std::move(partial));
    }
    alpha = std::max(1, static_cast<int>(std::floor(alpha * params.alpha_decay)));
  }
}

/// select_batch with the documented fallback applied: on failure the batch
/// becomes the b highest-score points under a greedy minimum pairwise
/// distance constraint, and the partition is flagged.
inline ClusterPartition select_batch_or_top_distinct(const DesignMatrix& candidates,
                                                     const Eigen::VectorXd& scores,
                                                     const ClusterParams& params) {
  try {
    return select_batch(candidates, scores, params);
  } catch (const BatchFallbackError&) {
    const std::vector<int> order = detail::score_order(scores);
    ClusterPartition part;
    part.batch = detail::greedy_top_distinct(candidates.points(), order, params.b);
    for (int idx : part.batch) part.clusters.push_back({idx});
    part.alpha_used = 1;
    part.fallback = true;
    return part;
  }
}

}  // namespace seqkrig

#endif
