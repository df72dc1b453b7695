#include "qrank/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qrank/error.hpp"
#include "qrank/model.hpp"
#include "qrank/textio.hpp"

namespace qrank::tuning {

const SweepRow& SweepResult::best_row() const {
  if (best == npos) throw Error("sweep has no successful row");
  return rows.at(best);
}

MetricValues train_and_evaluate(const Dataset& train, const Dataset& eval, const RankerConfig& cfg) {
  const auto outcome = train_ranker(train, cfg);
  const auto scores = score_dataset(outcome.model, eval);
  return evaluate_run(eval, scores).aggregate;
}

Evaluator linear_svm_evaluator(const Dataset& train, const Dataset& eval, const ranksvm::SvmOptions& base) {
  return [&train, &eval, base](double c) {
    auto opts = base;
    opts.c = c;
    const auto fit = ranksvm::train_linear(train, opts);
    const Model m = fit.model;
    return evaluate_run(eval, score_dataset(m, eval)).aggregate;
  };
}

std::size_t argmax_row(std::span<const SweepRow> rows, MetricId objective) {
  std::size_t best = SweepResult::npos;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed) continue;
    if (best == SweepResult::npos || rows[i].metrics.get(objective) > rows[best].metrics.get(objective)) best = i;
  }
  return best;
}

SweepResult kernel_sweep(const Dataset& train, const Dataset& eval, std::span<const ranksvm::KernelKind> kernels,
                         double c, const RankerConfig& base, MetricId objective) {
  if (train.groups.empty() || eval.groups.empty()) throw DataError("kernel sweep needs non-empty datasets");
  if (kernels.empty()) throw ConfigError("kernel list is empty");
  SweepResult result;
  result.objective = objective;
  for (auto kind : kernels) {
    RankerConfig cfg = base;
    cfg.kind = RankerKind::ranksvm;
    cfg.kernel = kind;
    cfg.svm.c = c;
    SweepRow row;
    row.setting = ranksvm::kernel_name(kind);
    row.c = c;
    try {
      row.metrics = train_and_evaluate(train, eval, cfg);
    } catch (const Error& e) {
      throw Error("kernel " + row.setting + ": " + e.what());
    }
    result.rows.push_back(std::move(row));
  }
  result.best = argmax_row(result.rows, objective);
  return result;
}

SweepResult scan_grid(std::span<const double> grid, const Evaluator& evaluate, MetricId objective) {
  if (grid.empty()) throw ConfigError("grid is empty");
  SweepResult result;
  result.objective = objective;
  for (double c : grid) {
    SweepRow row;
    row.setting = "c=" + textio::format_real(c);
    row.c = c;
    try {
      row.metrics = evaluate(c);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  result.best = argmax_row(result.rows, objective);
  return result;
}

SweepResult coarse_c_scan(const Dataset& train, const Dataset& eval, std::span<const double> grid,
                          const ranksvm::SvmOptions& base, MetricId objective) {
  return scan_grid(grid, linear_svm_evaluator(train, eval, base), objective);
}

void TuningConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  if (!(low <= high)) throw ConfigError("fine range needs low <= high");
  if (kernels.empty() || coarse_grid.empty()) throw ConfigError("kernel set and coarse grid must be non-empty");
  if (!(initial_c > 0.0)) throw ConfigError("initial C must be positive");
}

std::vector<double> TuningConfig::fine_grid() const {
  validate();
  std::vector<double> grid{initial_c};
  for (std::size_t k = 0;; ++k) {
    const double c = low + static_cast<double>(k) * step;
    if (c > high + 1e-9 * step) break;
    if (std::abs(c - initial_c) > 1e-9 * step) grid.push_back(c);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

FineSearchResult fine_c_search(const TuningConfig& cfg, const Evaluator& evaluate) {
  const auto grid = cfg.fine_grid();
  FineSearchResult out;
  out.trace = scan_grid(grid, evaluate, cfg.objective).rows;

  auto value = [&](const SweepRow& r) {
    return r.failed ? -std::numeric_limits<double>::infinity() : r.metrics.get(cfg.objective);
  };
  const auto initial = std::find_if(out.trace.begin(), out.trace.end(),
                                    [&](const SweepRow& r) { return r.c == cfg.initial_c; });
  double reference = value(*initial);
  out.best_c = cfg.initial_c;
  for (const auto& row : out.trace) {
    if (&row == &*initial || row.failed) continue;
    const double v = value(row);
    if (reference < v) {
      out.best_c = row.c;
      if (!cfg.literal) reference = v;
    }
  }
  return out;
}

FineSearchResult fine_c_search(const Dataset& train, const Dataset& eval, const TuningConfig& cfg,
                               const ranksvm::SvmOptions& base) {
  return fine_c_search(cfg, linear_svm_evaluator(train, eval, base));
}

std::string format_trace_csv(std::span<const SweepRow> rows) {
  std::string out = "c,map,mrr,p1,p5\n";
  for (const auto& r : rows) {
    out += textio::format_real(r.c);
    if (r.failed) {
      out += ",nan,nan,nan,nan\n";
      continue;
    }
    for (double v : {r.metrics.ap, r.metrics.rr, r.metrics.p1, r.metrics.p5}) out += ',' + textio::format_real(v);
    out += '\n';
  }
  return out;
}

std::string format_sweep_table(const SweepResult& result, const std::string& title) {
  std::string out = title + '\n';
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %8s\n", "setting", "MAP", "MRR", "P@1", "P@5");
  out += line;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    if (r.failed) {
      std::snprintf(line, sizeof line, "%-16s   failed: %s\n", r.setting.c_str(), r.error.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-16s %8.4f %8.4f %8.4f %8.4f%s\n", r.setting.c_str(), r.metrics.ap,
                    r.metrics.rr, r.metrics.p1, r.metrics.p5, i == result.best ? "  *" : "");
    }
    out += line;
  }
  return out;
}

}  // namespace qrank::tuning
