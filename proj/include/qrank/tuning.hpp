#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qrank/dataset.hpp"
#include "qrank/metrics.hpp"
#include "qrank/rankers.hpp"
#include "qrank/ranksvm.hpp"

namespace qrank::tuning {

/// One evaluated setting.
struct SweepRow {
  std::string setting;
  double c = 0.0;
  MetricValues metrics;  // aggregate MAP, MRR, ...
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  MetricId objective = MetricId::map;
  std::size_t best = npos;  // index into rows

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  const SweepRow& best_row() const;
};

/// Metrics of a model trained with trade-off `c`; throws on training failure.
using Evaluator = std::function<MetricValues(double c)>;

/// Trains on `train` and reports aggregate metrics on `eval`.
MetricValues train_and_evaluate(const Dataset& train, const Dataset& eval, const RankerConfig& cfg);

/// Linear RankSVM evaluator with `base` options and c overridden per call.
Evaluator linear_svm_evaluator(const Dataset& train, const Dataset& eval, const ranksvm::SvmOptions& base);

/// Index of the best non-failed row; ties keep the earliest row.
std::size_t argmax_row(std::span<const SweepRow> rows, MetricId objective);

/// One RankSVM per kernel at fixed c. A training failure is rethrown with the
/// kernel name.
SweepResult kernel_sweep(const Dataset& train, const Dataset& eval, std::span<const ranksvm::KernelKind> kernels,
                         double c, const RankerConfig& base, MetricId objective = MetricId::map);

/// Evaluates every grid value; failed values become flagged rows.
SweepResult scan_grid(std::span<const double> grid, const Evaluator& evaluate, MetricId objective = MetricId::map);

SweepResult coarse_c_scan(const Dataset& train, const Dataset& eval, std::span<const double> grid,
                          const ranksvm::SvmOptions& base, MetricId objective = MetricId::map);

struct TuningConfig {
  std::vector<ranksvm::KernelKind> kernels{ranksvm::KernelKind::linear, ranksvm::KernelKind::rbf,
                                           ranksvm::KernelKind::sigmoid};
  std::vector<double> coarse_grid{3, 30, 300, 3000, 30000};
  double low = 5.0;
  double high = 40.0;
  double step = 5.0;
  double initial_c = 3.0;
  MetricId objective = MetricId::map;
  /// Keep the reference score fixed at the initial C's value instead of
  /// raising it on each improvement; the search then returns the last C
  /// that beat the initial one rather than the best C.
  bool literal = false;

  void validate() const;
  /// initial_c and low, low + step, ... <= high; ascending, no duplicates.
  std::vector<double> fine_grid() const;
};

struct FineSearchResult {
  double best_c = 0.0;
  std::vector<SweepRow> trace;  // one row per fine_grid() value, ascending c
};

FineSearchResult fine_c_search(const TuningConfig& cfg, const Evaluator& evaluate);
FineSearchResult fine_c_search(const Dataset& train, const Dataset& eval, const TuningConfig& cfg,
                               const ranksvm::SvmOptions& base);

/// CSV `c,map,mrr,p1,p5`; failed rows carry `nan`.
std::string format_trace_csv(std::span<const SweepRow> rows);
/// Fixed-width table with one line per row and the best row marked.
std::string format_sweep_table(const SweepResult& result, const std::string& title);

}  // namespace qrank::tuning
