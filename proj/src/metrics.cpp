#include "qrank/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank {

RankedList rank_by_score(const QueryGroup& group, std::span<const double> scores) {
  if (scores.size() != group.size()) {
    throw DataError("query " + std::to_string(group.qid) + ": " + std::to_string(scores.size()) +
                    " scores for " + std::to_string(group.size()) + " candidates");
  }
  RankedList rl{group.qid, {}};
  rl.entries.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw DataError("query " + std::to_string(group.qid) + ": non-finite score");
    rl.entries.push_back(RankedEntry{i, scores[i], group.candidates[i].label});
  }
  std::stable_sort(rl.entries.begin(), rl.entries.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
  return rl;
}

std::vector<int> labels_in_rank_order(const RankedList& rl) {
  std::vector<int> out;
  out.reserve(rl.entries.size());
  for (const auto& e : rl.entries) out.push_back(e.label);
  return out;
}

bool has_relevant(const RankedList& rl) {
  return std::any_of(rl.entries.begin(), rl.entries.end(),
                     [](const RankedEntry& e) { return e.label > 0; });
}

double average_precision(const RankedList& rl) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rl.entries.size(); ++r) {
    if (rl.entries[r].label > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double mean_average_precision(std::span<const RankedList> lists) {
  if (lists.empty()) throw DataError("MAP of an empty query set");
  double sum = 0.0;
  for (const auto& rl : lists) sum += average_precision(rl);
  return sum / static_cast<double>(lists.size());
}

double reciprocal_rank(const RankedList& rl) {
  for (std::size_t r = 0; r < rl.entries.size(); ++r)
    if (rl.entries[r].label > 0) return 1.0 / static_cast<double>(r + 1);
  return 0.0;
}

double precision_at_k(const RankedList& rl, std::size_t k) {
  if (k == 0) throw ConfigError("precision cutoff must be >= 1");
  const std::size_t top = std::min(k, rl.entries.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r)
    if (rl.entries[r].label > 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double err_at_k(const RankedList& rl, std::size_t k, int g_max) {
  if (k == 0) throw ConfigError("ERR cutoff must be >= 1");
  if (g_max < 0) throw ConfigError("ERR maximum grade must be >= 0");
  const double denom = std::ldexp(1.0, g_max);
  const std::size_t top = std::min(k, rl.entries.size());
  double err = 0.0;
  double not_stopped = 1.0;
  for (std::size_t r = 0; r < top; ++r) {
    const int g = rl.entries[r].label;
    if (g > g_max) {
      throw DataError("label " + std::to_string(g) + " exceeds ERR maximum grade " +
                      std::to_string(g_max));
    }
    const double rel = (std::ldexp(1.0, g) - 1.0) / denom;
    err += not_stopped * rel / static_cast<double>(r + 1);
    not_stopped *= 1.0 - rel;
  }
  return err;
}

double avg_rec(const RankedList& rl) {
  const auto n = rl.entries.size();
  const auto relevant = static_cast<std::size_t>(std::count_if(
      rl.entries.begin(), rl.entries.end(), [](const RankedEntry& e) { return e.label > 0; }));
  if (relevant == 0 || n == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (const auto& e : rl.entries) {
    if (e.label > 0) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(relevant);
  }
  return sum / static_cast<double>(n);
}

MetricId parse_metric(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "map" || s == "ap") return MetricId::map;
  if (s == "mrr" || s == "rr") return MetricId::mrr;
  if (s == "p@1") return MetricId::p1;
  if (s == "p@5") return MetricId::p5;
  if (s == "err@10" || s == "err") return MetricId::err10;
  if (s == "avgrec") return MetricId::avgrec;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::string metric_name(MetricId id) {
  switch (id) {
    case MetricId::map: return "MAP";
    case MetricId::mrr: return "MRR";
    case MetricId::p1: return "P@1";
    case MetricId::p5: return "P@5";
    case MetricId::err10: return "ERR@10";
    case MetricId::avgrec: return "AvgRec";
  }
  return "?";
}

double metric_value(const RankedList& rl, MetricId id, int g_max) {
  switch (id) {
    case MetricId::map: return average_precision(rl);
    case MetricId::mrr: return reciprocal_rank(rl);
    case MetricId::p1: return precision_at_k(rl, 1);
    case MetricId::p5: return precision_at_k(rl, 5);
    case MetricId::err10: return err_at_k(rl, 10, g_max);
    case MetricId::avgrec: return avg_rec(rl);
  }
  return 0.0;
}

double MetricValues::get(MetricId id) const {
  switch (id) {
    case MetricId::map: return ap;
    case MetricId::mrr: return rr;
    case MetricId::p1: return p1;
    case MetricId::p5: return p5;
    case MetricId::err10: return err10;
    case MetricId::avgrec: return avgrec;
  }
  return 0.0;
}

EvaluationReport evaluate_run(const Dataset& ds, std::span<const std::vector<double>> scores,
                              int g_max) {
  if (ds.groups.empty()) throw DataError("empty dataset");
  if (scores.size() != ds.groups.size()) {
    throw DataError("run covers " + std::to_string(scores.size()) + " queries, dataset has " +
                    std::to_string(ds.groups.size()));
  }
  EvaluationReport report;
  report.g_max = g_max < 0 ? ds.max_label() : g_max;
  report.num_queries = ds.groups.size();
  MetricValues sum;
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    const auto rl = rank_by_score(ds.groups[q], scores[q]);
    MetricValues v;
    v.ap = average_precision(rl);
    v.rr = reciprocal_rank(rl);
    v.p1 = precision_at_k(rl, 1);
    v.p5 = precision_at_k(rl, 5);
    v.err10 = err_at_k(rl, 10, report.g_max);
    v.avgrec = avg_rec(rl);
    if (!has_relevant(rl)) ++report.zero_relevant_queries;
    sum.ap += v.ap;
    sum.rr += v.rr;
    sum.p1 += v.p1;
    sum.p5 += v.p5;
    sum.err10 += v.err10;
    sum.avgrec += v.avgrec;
    report.per_query.emplace(rl.qid, v);
  }
  const double n = static_cast<double>(report.num_queries);
  report.aggregate = {sum.ap / n, sum.rr / n, sum.p1 / n, sum.p5 / n, sum.err10 / n, sum.avgrec / n};
  return report;
}

std::string format_report_table(const EvaluationReport& report) {
  const MetricId ids[] = {MetricId::map, MetricId::mrr, MetricId::p1,
                          MetricId::p5, MetricId::err10, MetricId::avgrec};
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %10s %10s\n", "metric", "value", "x100");
  out += line;
  for (auto id : ids) {
    const double v = report.aggregate.get(id);
    std::snprintf(line, sizeof line, "%-8s %10.4f %10.3f\n", metric_name(id).c_str(), v, 100.0 * v);
    out += line;
  }
  std::snprintf(line, sizeof line, "queries  %zu (no relevant candidate: %zu)\n", report.num_queries,
                report.zero_relevant_queries);
  out += line;
  return out;
}

std::string format_report_kv(const EvaluationReport& report) {
  const MetricId ids[] = {MetricId::map, MetricId::mrr, MetricId::p1,
                          MetricId::p5, MetricId::err10, MetricId::avgrec};
  std::string out;
  for (auto id : ids) out += metric_name(id) + "=" + textio::format_real(report.aggregate.get(id)) + "\n";
  return out;
}

std::string format_run(const Dataset& ds, std::span<const std::vector<double>> scores) {
  if (scores.size() != ds.groups.size()) throw DataError("run/dataset query count mismatch");
  std::string out;
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    const auto rl = rank_by_score(ds.groups[q], scores[q]);
    for (std::size_t r = 0; r < rl.entries.size(); ++r) {
      out += std::to_string(rl.qid) + ' ' + std::to_string(rl.entries[r].index) + ' ' +
             std::to_string(r + 1) + ' ' + textio::format_real(rl.entries[r].score) + '\n';
    }
  }
  return out;
}

std::vector<std::vector<double>> parse_run(std::string_view text, const Dataset& ds) {
  std::vector<std::vector<double>> scores(ds.groups.size());
  std::vector<std::vector<bool>> filled(ds.groups.size());
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    scores[q].assign(ds.groups[q].size(), 0.0);
    filled[q].assign(ds.groups[q].size(), false);
  }
  std::size_t group = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool any = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto tokens = textio::split_ws(textio::trim(text.substr(start, end - start)));
    start = end + 1;
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens.size() != 4) throw ParseError(line_no, "expected '<qid> <index> <rank> <score>'");
    const auto qid = textio::parse_uint(tokens[0]);
    const auto idx = textio::parse_uint(tokens[1]);
    const auto rank = textio::parse_uint(tokens[2]);
    const auto score = textio::parse_real(tokens[3]);
    if (!qid || !idx || !rank || *rank == 0 || !score || !std::isfinite(*score))
      throw ParseError(line_no, "malformed run line");
    while (group < ds.groups.size() && ds.groups[group].qid != *qid) {
      if (any && std::find(filled[group].begin(), filled[group].end(), false) != filled[group].end())
        throw ParseError(line_no, "run does not match dataset query order");
      ++group;
    }
    if (group == ds.groups.size())
      throw ParseError(line_no, "qid " + std::to_string(*qid) + " not in dataset order");
    if (*idx >= ds.groups[group].size())
      throw ParseError(line_no, "candidate index out of range");
    if (filled[group][*idx]) throw ParseError(line_no, "duplicate candidate index");
    filled[group][*idx] = true;
    scores[group][*idx] = *score;
    any = true;
  }
  for (std::size_t q = 0; q < ds.groups.size(); ++q)
    if (std::find(filled[q].begin(), filled[q].end(), false) != filled[q].end())
      throw DataError("run file is missing candidates of query " + std::to_string(ds.groups[q].qid));
  return scores;
}

}  // namespace qrank
