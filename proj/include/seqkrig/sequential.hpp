#ifndef SEQKRIG_SEQUENTIAL_HPP
#define SEQKRIG_SEQUENTIAL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seqkrig/batch.hpp"
#include "seqkrig/criteria.hpp"
#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"
#include "seqkrig/kriging.hpp"
#include "seqkrig/rng.hpp"

namespace seqkrig {

/// Black-box objective evaluable on [0,1]^m.
struct Objective {
  std::string name;
  std::function<double(const Eigen::RowVectorXd&)> eval;
};

/// Evaluation cache: each point is observed exactly once per campaign and
/// repeated requests are served from the cache. A non-finite response is a
/// campaign error naming the point.
class ObservationCache {
 public:
  explicit ObservationCache(Objective objective) : objective_(std::move(objective)) {}

  double observe(const Eigen::RowVectorXd& x) {
    std::vector<double> key(x.data(), x.data() + x.size());
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double value = objective_.eval(x);
    ++evaluations_;
    if (!std::isfinite(value)) {
      std::ostringstream oss;
      oss << "objective '" << objective_.name << "' returned a non-finite value at (";
      for (int i = 0; i < x.size(); ++i) oss << (i ? ", " : "") << x(i);
      oss << ")";
      throw NumericalError(oss.str());
    }
    cache_.emplace(std::move(key), value);
    return value;
  }

  Eigen::VectorXd observe_all(const DesignMatrix& points) {
    Eigen::VectorXd values(points.n());
    for (int i = 0; i < points.n(); ++i) values(i) = observe(points.row(i));
    return values;
  }

  long evaluations() const { return evaluations_; }

 private:
  Objective objective_;
  std::map<std::vector<double>, double> cache_;
  long evaluations_ = 0;
};

enum class TerminationKind { RoundCap, PointCap, RmseThreshold };

struct Termination {
  TerminationKind kind = TerminationKind::RoundCap;
  int point_cap = 0;           // PointCap: total observation budget
  double rmse_threshold = 0.0; // RmseThreshold: stop once the round RMSE drops below
};

enum class GridMethod { MdOptimized, Lhs };

struct CandidateGridSpec {
  int n_all = 1000;
  GridMethod method = GridMethod::MdOptimized;
  bool regenerate_each_round = false;  // non-default; the grid is normally fixed per campaign
};

/// Per-round accuracy bookkeeping against a fixed test matrix whose true
/// values are known (test-function objectives only).
struct MetricsSpec {
  DesignMatrix test_matrix;
  Eigen::VectorXd truth;
};

struct CampaignConfig {
  Objective objective;
  int m = 0;
  int n0 = 0;
  CriterionSpec criterion{};
  ClusterParams batch{};  // b = 1 gives the one-point design
  int rounds = 1;
  CandidateGridSpec grid{};
  std::uint64_t seed = 0;
  Termination termination{};
  std::optional<MetricsSpec> metrics;
  KernelFamily family = KernelFamily::GaussianSeparable;
  FitOptions fit_options{};
};

struct ModelSummary {
  KernelSpec kernel;
  double tau_squared = 0.0;
  double log_likelihood = 0.0;
  int nugget_escalations = 0;
};

inline ModelSummary summarize(const KrigingModel& model) {
  return ModelSummary{model.kernel(), model.tau_squared(), model.log_likelihood(),
                      model.nugget_escalations()};
}

struct RoundRecord {
  int round = 0;                       // 0 is the initial design
  Eigen::MatrixXd batch_points;        // 0 x m for round 0
  Eigen::VectorXd batch_observations;
  std::optional<ModelSummary> model;   // absent when the round skipped refitting
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  bool batch_fallback = false;
};

struct CampaignResult {
  DesignMatrix final_design;
  Eigen::VectorXd final_observations;
  std::vector<RoundRecord> rounds;
  long total_evaluations = 0;
  std::uint64_t seed = 0;
};

/// Raised on objective failure or candidate exhaustion; carries whatever
/// part of the campaign completed.
class CampaignError : public Error {
 public:
  CampaignError(const std::string& msg, std::optional<CampaignResult> partial = {})
      : Error(msg), partial_(std::move(partial)) {}
  const std::optional<CampaignResult>& partial() const { return partial_; }

 private:
  std::optional<CampaignResult> partial_;
};

namespace detail {

// Seed-stream tags within one campaign.
inline constexpr std::uint64_t kSeedInitialDesign = 1;
inline constexpr std::uint64_t kSeedGrid = 2;
inline constexpr std::uint64_t kSeedFitBase = 100;

inline DesignMatrix make_grid(const CandidateGridSpec& grid, int m, std::uint64_t seed) {
  if (grid.method == GridMethod::Lhs) return latin_hypercube(grid.n_all, m, seed);
  return md_optimized_design(grid.n_all, m, seed);
}

inline std::optional<DesignMatrix> remove_rows(const DesignMatrix& pool,
                                               const std::vector<int>& removed) {
  std::vector<bool> drop(static_cast<std::size_t>(pool.n()), false);
  for (int idx : removed) drop[static_cast<std::size_t>(idx)] = true;
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(pool.n()));
  for (int i = 0; i < pool.n(); ++i)
    if (!drop[static_cast<std::size_t>(i)]) keep.push_back(i);
  if (keep.empty()) return std::nullopt;
  return pool.subset(keep);
}

}  // namespace detail

/// Runs one sequential-design campaign: space-filling initial design,
/// observe, fit, score the candidate grid, select one point or a clustered
/// batch, append, repeat until termination. Deterministic for a given
/// seed. Selected candidates leave the pool; for the observation-free MD
/// criterion the per-round refit is skipped unless metrics are requested,
/// but observations are still collected so the final model can be fitted.
inline CampaignResult run_campaign(const CampaignConfig& config, int jobs = 0) {
  if (config.m < 1) throw ArgumentError("dimension must be >= 1");
  if (config.n0 < 2) throw ArgumentError("initial design needs n0 >= 2");
  if (config.rounds < 1) throw ArgumentError("rounds must be >= 1");
  config.batch.validate();
  if (config.grid.n_all < config.batch.b)
    throw ArgumentError("candidate grid smaller than batch size");
  if (!config.objective.eval) throw ArgumentError("objective is not evaluable");
  if (config.termination.kind == TerminationKind::PointCap &&
      config.termination.point_cap < config.n0)
    throw ArgumentError("point cap below the initial design size");
  if (config.termination.kind == TerminationKind::RmseThreshold && !config.metrics)
    throw ArgumentError("rmse-threshold termination needs a test matrix");
  if (config.metrics && config.metrics->truth.size() != config.metrics->test_matrix.n())
    throw ArgumentError("metrics truth vector does not match its test matrix");

  ObservationCache cache(config.objective);
  const std::uint64_t seed = config.seed;

  DesignMatrix design =
      md_optimized_design(config.n0, config.m, derive_seed(seed, detail::kSeedInitialDesign));
  std::vector<RoundRecord> records;
  Eigen::VectorXd observations;
  auto partial_result = [&]() -> std::optional<CampaignResult> {
    if (records.empty()) return std::nullopt;
    return CampaignResult{design, observations, records, cache.evaluations(), seed};
  };
  try {
    observations = cache.observe_all(design);
  } catch (const NumericalError& e) {
    throw CampaignError(e.what(), std::nullopt);
  }

  std::optional<DesignMatrix> pool;
  {
    const DesignMatrix grid =
        detail::make_grid(config.grid, config.m, derive_seed(seed, detail::kSeedGrid));
    std::vector<int> keep;
    for (int i = 0; i < grid.n(); ++i)
      if (!design.contains(grid.row(i))) keep.push_back(i);
    if (!keep.empty()) pool = grid.subset(keep);
  }

  std::optional<KernelSpec> warm;
  auto fit_round = [&](int round) {
    KrigingModel model = fit(design, observations, config.family,
                             derive_seed(seed, detail::kSeedFitBase + round), warm,
                             config.fit_options);
    warm = model.kernel();
    return model;
  };
  auto attach_metrics = [&](RoundRecord& rec, const KrigingModel& model) {
    if (!config.metrics) return;
    const auto [rmse, mae] =
        prediction_errors(model, config.metrics->test_matrix, config.metrics->truth, jobs);
    rec.rmse = rmse;
    rec.mae = mae;
  };

  KrigingModel model = fit_round(0);
  {
    RoundRecord rec;
    rec.round = 0;
    rec.batch_points = Eigen::MatrixXd(0, config.m);
    rec.batch_observations = Eigen::VectorXd(0);
    rec.model = summarize(model);
    attach_metrics(rec, model);
    records.push_back(std::move(rec));
  }

  const bool needs_model = criterion_needs_model(config.criterion.kind);
  bool last_round_fitted = true;
  for (int round = 1; round <= config.rounds; ++round) {
    if (config.termination.kind == TerminationKind::PointCap &&
        design.n() + config.batch.b > config.termination.point_cap)
      break;
    if (config.termination.kind == TerminationKind::RmseThreshold &&
        records.back().rmse <= config.termination.rmse_threshold)
      break;
    if (!pool || pool->n() < config.batch.b)
      throw CampaignError("candidate pool exhausted", partial_result());

    if (config.grid.regenerate_each_round && round > 1) {
      const DesignMatrix grid = detail::make_grid(
          config.grid, config.m, derive_seed(seed, detail::kSeedGrid + 1000 + round));
      std::vector<int> keep;
      for (int i = 0; i < grid.n(); ++i)
        if (!design.contains(grid.row(i))) keep.push_back(i);
      pool.reset();
      if (!keep.empty()) pool = grid.subset(keep);
      if (!pool || pool->n() < config.batch.b)
        throw CampaignError("candidate pool exhausted", partial_result());
    }

    const CandidateScan scan = argmax_over_candidates(
        config.criterion, needs_model ? &model : nullptr, design, *pool, jobs);
    const ClusterPartition part = select_batch_or_top_distinct(*pool, scan.scores, config.batch);

    Eigen::MatrixXd batch_points(part.batch.size(), config.m);
    for (std::size_t i = 0; i < part.batch.size(); ++i)
      batch_points.row(static_cast<Eigen::Index>(i)) = pool->row(part.batch[i]);
    Eigen::VectorXd batch_obs(batch_points.rows());
    try {
      for (Eigen::Index i = 0; i < batch_points.rows(); ++i)
        batch_obs(i) = cache.observe(batch_points.row(i));
    } catch (const NumericalError& e) {
      throw CampaignError(e.what(), partial_result());
    }

    design = design.appended_rows(batch_points);
    Eigen::VectorXd grown(observations.size() + batch_obs.size());
    grown << observations, batch_obs;
    observations = std::move(grown);
    pool = detail::remove_rows(*pool, part.batch);

    RoundRecord rec;
    rec.round = round;
    rec.batch_points = std::move(batch_points);
    rec.batch_observations = std::move(batch_obs);
    rec.batch_fallback = part.fallback;
    last_round_fitted = needs_model || config.metrics.has_value();
    if (last_round_fitted) {
      model = fit_round(round);
      rec.model = summarize(model);
      attach_metrics(rec, model);
    }
    records.push_back(std::move(rec));
  }

  if (!last_round_fitted) {
    // Final fit on the complete design (observation-free criterion without
    // per-round metrics).
    model = fit_round(static_cast<int>(records.size()));
    records.back().model = summarize(model);
    attach_metrics(records.back(), model);
  }

  return CampaignResult{std::move(design), std::move(observations), std::move(records),
                        cache.evaluations(), seed};
}

}  // namespace seqkrig

#endif
