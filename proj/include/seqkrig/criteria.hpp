#ifndef SEQKRIG_CRITERIA_HPP
#define SEQKRIG_CRITERIA_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "seqkrig/design.hpp"
#include "seqkrig/errors.hpp"
#include "seqkrig/kriging.hpp"
#include "seqkrig/parallel.hpp"

namespace seqkrig {

enum class CriterionKind {
  EI0,           // squared deviation from nearest response + variance
  EI1,           // first-order Taylor deviation + variance
  EI2,           // Taylor deviation scaled by distance + variance
  MaxVariance,   // prediction variance
  MD,            // negative mixture discrepancy of the augmented design
  Gradient,      // expected gradient norm x distance + local variability
  VarianceBound  // min of prediction-sd and gradient-bound terms
};

struct CriterionSpec {
  CriterionKind kind = CriterionKind::Gradient;
};

inline bool criterion_needs_model(CriterionKind kind) { return kind != CriterionKind::MD; }

inline const char* criterion_name(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::EI0: return "ei0";
    case CriterionKind::EI1: return "ei1";
    case CriterionKind::EI2: return "ei2";
    case CriterionKind::MaxVariance: return "s";
    case CriterionKind::MD: return "md";
    case CriterionKind::Gradient: return "gra";
    case CriterionKind::VarianceBound: return "var";
  }
  return "?";
}

inline std::optional<CriterionKind> criterion_from_name(std::string_view name) {
  if (name == "ei0") return CriterionKind::EI0;
  if (name == "ei1") return CriterionKind::EI1;
  if (name == "ei2") return CriterionKind::EI2;
  if (name == "s") return CriterionKind::MaxVariance;
  if (name == "md") return CriterionKind::MD;
  if (name == "gra") return CriterionKind::Gradient;
  if (name == "var") return CriterionKind::VarianceBound;
  return {};
}

/// Nearest existing design point x* to a candidate x: Euclidean distance,
/// ties broken by the lowest row index.
struct NearestNeighborInfo {
  int index = -1;
  double distance = 0.0;
  double f_star = 0.0;
};

inline NearestNeighborInfo nearest_neighbor(const DesignMatrix& design,
                                            const Eigen::VectorXd& observations,
                                            const Eigen::RowVectorXd& x) {
  if (observations.size() != design.n())
    throw ArgumentError("observation count does not match design rows");
  if (x.size() != design.m()) throw ArgumentError("point dimension mismatch");
  NearestNeighborInfo best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < design.n(); ++i) {
    const double d = (design.points().row(i) - x).norm();
    if (d < best.distance) {
      best.index = i;
      best.distance = d;
      best.f_star = observations(i);
    }
  }
  return best;
}

inline double phi_s(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  return model.predict_variance(x);
}

/// Observation-free space-filling score: -MD^2 of the design augmented by x.
inline double phi_md(const DesignMatrix& current, const Eigen::RowVectorXd& x) {
  return -mixture_discrepancy(current.appended(x)).md_squared;
}

inline double phi_ei0(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  const auto nn = nearest_neighbor(model.design(), model.observations(), x);
  const double dev = model.predict(x) - nn.f_star;
  return dev * dev + model.predict_variance(x);
}

inline double phi_ei1(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  const auto nn = nearest_neighbor(model.design(), model.observations(), x);
  const Eigen::RowVectorXd xs = model.design().row(nn.index);
  const Eigen::VectorXd grad_star = model.predict_gradient(xs);
  const double dev = model.predict(x) - nn.f_star - grad_star.dot((x - xs).transpose());
  return dev * dev + model.predict_variance(x);
}

inline double phi_ei2(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  const auto nn = nearest_neighbor(model.design(), model.observations(), x);
  const Eigen::RowVectorXd xs = model.design().row(nn.index);
  const Eigen::VectorXd grad_star = model.predict_gradient(xs);
  const double dev = model.predict(x) - nn.f_star - grad_star.dot((x - xs).transpose());
  return dev * dev * nn.distance + model.predict_variance(x);
}

/// Gradient-based score sqrt(E ||grad f||^2) d(x, x*) + |yhat(x) - f(x*)|.
inline double phi_gra(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  const auto nn = nearest_neighbor(model.design(), model.observations(), x);
  return std::sqrt(model.gradient_norm_expectation(x)) * nn.distance +
         std::abs(model.predict(x) - nn.f_star);
}

/// Variance-based score min( sqrt(k - r'K^-1 r), sqrt(sum g_i) d(x, x*) ).
/// Both terms are tau^2-free by definition.
inline double phi_var(const KrigingModel& model, const Eigen::RowVectorXd& x) {
  const auto nn = nearest_neighbor(model.design(), model.observations(), x);
  const double sd = std::sqrt(model.unscaled_prediction_variance(x));
  const double grad_bound = std::sqrt(model.gradient_variance_diagonal(x).sum()) * nn.distance;
  return std::min(sd, grad_bound);
}

inline double evaluate_criterion(const CriterionSpec& spec, const KrigingModel* model,
                                 const DesignMatrix& current, const Eigen::RowVectorXd& x) {
  if (spec.kind == CriterionKind::MD) return phi_md(current, x);
  if (model == nullptr) throw ArgumentError("criterion requires a fitted model");
  switch (spec.kind) {
    case CriterionKind::EI0: return phi_ei0(*model, x);
    case CriterionKind::EI1: return phi_ei1(*model, x);
    case CriterionKind::EI2: return phi_ei2(*model, x);
    case CriterionKind::MaxVariance: return phi_s(*model, x);
    case CriterionKind::Gradient: return phi_gra(*model, x);
    case CriterionKind::VarianceBound: return phi_var(*model, x);
    default: throw ArgumentError("unknown criterion");
  }
}

/// Lowest-index maximizer, skipping NaN entries; -1 when nothing scored.
inline int argmax_index(const Eigen::VectorXd& scores) {
  int best = -1;
  for (int i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores(i))) continue;
    if (best < 0 || scores(i) > scores(best)) best = i;
  }
  return best;
}

struct CandidateScan {
  int best_index = -1;
  double best_value = 0.0;
  Eigen::VectorXd scores;  // NaN where the candidate was skipped
};

/// Scores every candidate and returns the lowest-index maximizer plus the
/// full score vector. Candidates already in `current` are skipped (NaN),
/// not errors. Evaluation parallelizes over candidates; each score lands
/// in its own slot so the result is identical for any job count.
inline CandidateScan argmax_over_candidates(const CriterionSpec& spec, const KrigingModel* model,
                                            const DesignMatrix& current,
                                            const DesignMatrix& candidates, int jobs = 1) {
  if (criterion_needs_model(spec.kind) && model == nullptr)
    throw ArgumentError("criterion requires a fitted model");
  const int nc = candidates.n();
  Eigen::VectorXd scores(nc);
  parallel_for(0, nc, jobs, [&](int i) {
    const Eigen::RowVectorXd x = candidates.row(i);
    scores(i) = current.contains(x) ? std::numeric_limits<double>::quiet_NaN()
                                    : evaluate_criterion(spec, model, current, x);
  });
  const int best = argmax_index(scores);
  if (best < 0) throw EmptyCandidateError("every candidate already belongs to the design");
  return CandidateScan{best, scores(best), std::move(scores)};
}

}  // namespace seqkrig

#endif
