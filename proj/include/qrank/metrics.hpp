#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"

namespace qrank {

/// One position of a ranked list.
struct RankedEntry {
  std::size_t index = 0;  // position of the candidate in its QueryGroup
  double score = 0.0;
  int label = 0;
};

/// A query's candidates in descending score order; ties keep ascending index.
struct RankedList {
  Qid qid = 0;
  std::vector<RankedEntry> entries;
};

RankedList rank_by_score(const QueryGroup& group, std::span<const double> scores);

/// Labels in rank order.
std::vector<int> labels_in_rank_order(const RankedList& rl);

bool has_relevant(const RankedList& rl);

/// Average precision; 0 when the list holds no relevant item (label > 0).
double average_precision(const RankedList& rl);
double mean_average_precision(std::span<const RankedList> lists);
double reciprocal_rank(const RankedList& rl);
/// Relevant items in the top min(k, n), divided by k.
double precision_at_k(const RankedList& rl, std::size_t k);
/// Cascade ERR@k with gain (2^g - 1) / 2^g_max.
double err_at_k(const RankedList& rl, std::size_t k, int g_max);
/// Mean of Recall@r over r = 1..n; 0 when nothing is relevant.
double avg_rec(const RankedList& rl);

enum class MetricId { map, mrr, p1, p5, err10, avgrec };

MetricId parse_metric(std::string_view name);
std::string metric_name(MetricId id);

/// Per-query value of `id` (AP for map, RR for mrr, ...).
double metric_value(const RankedList& rl, MetricId id, int g_max);

struct MetricValues {
  double ap = 0.0;
  double rr = 0.0;
  double p1 = 0.0;
  double p5 = 0.0;
  double err10 = 0.0;
  double avgrec = 0.0;

  double get(MetricId id) const;
};

struct EvaluationReport {
  std::map<Qid, MetricValues> per_query;
  MetricValues aggregate;  // ap holds MAP, rr holds MRR
  std::size_t num_queries = 0;
  std::size_t zero_relevant_queries = 0;  // queries whose AP/AvgRec defaulted to 0
  int g_max = 0;
};

/// `scores[q]` scores the candidates of `ds.groups[q]`. `g_max` < 0 means the
/// dataset's maximum label.
EvaluationReport evaluate_run(const Dataset& ds, std::span<const std::vector<double>> scores,
                              int g_max = -1);

/// Fixed-width table, fractions and x100.
std::string format_report_table(const EvaluationReport& report);
/// `KEY=value` lines for MAP, MRR, P@1, P@5, ERR@10, AvgRec.
std::string format_report_kv(const EvaluationReport& report);

/// Run file line: `<qid> <candidate-index> <rank> <score>`.
std::string format_run(const Dataset& ds, std::span<const std::vector<double>> scores);
/// Reads a run file back into per-group score vectors aligned with `ds`.
std::vector<std::vector<double>> parse_run(std::string_view text, const Dataset& ds);

}  // namespace qrank
