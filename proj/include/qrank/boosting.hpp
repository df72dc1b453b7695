#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"
#include "qrank/metrics.hpp"
#include "qrank/pairwise.hpp"

namespace qrank::boosting {

/// Binary threshold ranker: 1 iff direction * x[fid] > direction * threshold.
struct Stump {
  std::size_t fid = 1;  // 1-based
  double threshold = 0.0;
  int direction = 1;

  double eval(std::span<const double> x) const;
  bool operator==(const Stump&) const = default;
};

enum class BoostKind { rankboost, adarank };

/// One weighted weak ranker. RankBoost terms are stumps; AdaRank terms score
/// with the raw feature value x[fid].
struct Term {
  double alpha = 0.0;
  std::size_t fid = 1;
  std::optional<Stump> stump;

  double eval(std::span<const double> x) const;
  bool operator==(const Term&) const = default;
};

struct BoostEnsemble {
  BoostKind kind = BoostKind::rankboost;
  std::size_t dim = 0;
  std::vector<Term> terms;

  bool operator==(const BoostEnsemble&) const = default;
};

/// sum_t alpha_t h_t(x)
double score_ensemble(const BoostEnsemble& m, std::span<const double> x);

/// alpha = 1/2 ln((1 + r) / (1 - r)) with r clamped to [-1 + 1e-10, 1 - 1e-10].
double boost_alpha(double r);

struct RankBoostOptions {
  std::size_t iterations = 300;
  MetricId metric = MetricId::err10;
  /// Fraction of trailing training queries held out for round selection when
  /// no validation set is given. 0 tracks the metric on the training data.
  double holdout_fraction = 0.2;
  /// Return the prefix of rounds with the best validation metric.
  bool select_best_round = true;
};

struct RankBoostTrace {
  std::vector<Stump> stumps;                  // selected weak ranker per round
  std::vector<double> r;                      // its weighted pair agreement
  std::vector<double> log_loss;               // log sum_p exp(-(f(x_u) - f(x_v))) after each round
  std::vector<double> distribution_sum;       // sum of pair masses after renormalizing
  std::vector<double> validation_metric;
  std::size_t best_round = 0;                 // rounds kept in the model
};

struct RankBoostFit {
  BoostEnsemble model;
  RankBoostTrace trace;
};

/// Weighted agreement r = sum_p D(p) (h(x_u) - h(x_v)) of every candidate
/// stump, for the stump search and its tests.
struct StumpChoice {
  Stump stump;
  double r = 0.0;
};
/// Best stump for pair masses `mass` over `pairs` of `ds` (ties: lowest fid,
/// lowest threshold, direction +1). nullopt when every feature is constant.
std::optional<StumpChoice> best_stump(const Dataset& ds, std::span<const DatasetPair> pairs,
                                      std::span<const double> mass);

/// Trains on `train`; `validation` (if given) drives round selection.
RankBoostFit train_rankboost(const Dataset& train, const RankBoostOptions& opts,
                             const Dataset* validation = nullptr);

struct AdaRankOptions {
  std::size_t rounds = 500;
  double tolerance = 0.002;
  std::size_t max_consecutive = 5;
  MetricId metric = MetricId::map;
};

struct AdaRankTrace {
  std::vector<std::size_t> selected;          // feature id per executed round
  std::vector<double> weighted_score;         // sum_q P(q) E(q, feature) of the pick
  std::vector<double> train_metric;           // ensemble metric after each round
  std::vector<std::vector<double>> query_distribution;  // P after each round
  std::size_t rounds_executed = 0;
  bool early_stopped = false;
  std::string stop_reason;
};

struct AdaRankFit {
  BoostEnsemble model;
  AdaRankTrace trace;
};

/// Per-query metric of ranking every group by a single feature: [q][fid-1].
std::vector<std::vector<double>> feature_query_metrics(const Dataset& ds, MetricId metric, int g_max);

AdaRankFit train_adarank(const Dataset& ds, const AdaRankOptions& opts);

std::string format_model(const BoostEnsemble& m);
BoostEnsemble parse_model(std::string_view text);

}  // namespace qrank::boosting
