#include "qrank/protocol.hpp"

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank::protocol {

ProtocolResult run_protocol(const Dataset& train, const Dataset& eval, const ProtocolOptions& opts) {
  opts.tuning.validate();
  ProtocolResult out;
  out.train_queries = train.groups.size();
  out.eval_queries = eval.groups.size();

  const RankerKind order[] = {RankerKind::ranksvm, RankerKind::rankboost, RankerKind::ranknet,
                              RankerKind::adarank, RankerKind::rforest};
  out.methods.objective = opts.tuning.objective;
  for (auto kind : order) {
    auto cfg = RankerConfig::defaults(kind, opts.desk_scale, opts.seed);
    cfg.svm.c = opts.comparison_c;
    tuning::SweepRow row;
    row.setting = ranker_name(kind);
    try {
      row.metrics = tuning::train_and_evaluate(train, eval, cfg);
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
    out.methods.rows.push_back(std::move(row));
  }
  out.methods.best = tuning::argmax_row(out.methods.rows, out.methods.objective);

  const auto base = RankerConfig::defaults(RankerKind::ranksvm, opts.desk_scale, opts.seed);
  out.kernels = tuning::kernel_sweep(train, eval, opts.tuning.kernels, opts.comparison_c, base, opts.tuning.objective);
  out.coarse = tuning::coarse_c_scan(train, eval, opts.tuning.coarse_grid, base.svm, opts.tuning.objective);
  out.fine = tuning::fine_c_search(train, eval, opts.tuning, base.svm);
  return out;
}

ProtocolResult run_protocol(std::span<const FlatRecord> records, const ProtocolOptions& opts) {
  const auto grouped = attach_query_ids(records, opts.group_size);
  const auto [train, eval] = split_tail(grouped, opts.tail);
  return run_protocol(train, eval, opts);
}

void write_reports(const ProtocolResult& result, const std::string& dir) {
  const std::string sizes = "train queries: " + std::to_string(result.train_queries) +
                            ", evaluation queries: " + std::to_string(result.eval_queries) + '\n';
  textio::write_file(dir + "/methods.txt",
                     tuning::format_sweep_table(result.methods, "Ranker comparison on held-out queries") + sizes);
  textio::write_file(dir + "/kernels.txt", tuning::format_sweep_table(result.kernels, "RankSVM kernels"));
  textio::write_file(dir + "/coarse_c.txt", tuning::format_sweep_table(result.coarse, "RankSVM C range"));
  tuning::SweepResult fine;
  fine.rows = result.fine.trace;
  fine.objective = result.coarse.objective;
  fine.best = tuning::SweepResult::npos;
  for (std::size_t i = 0; i < fine.rows.size(); ++i)
    if (fine.rows[i].c == result.fine.best_c) fine.best = i;
  textio::write_file(dir + "/fine_c.txt",
                     tuning::format_sweep_table(fine, "RankSVM fine C search") +
                         "best c=" + textio::format_real(result.fine.best_c) + '\n');
  textio::write_file(dir + "/fine_trace.csv", tuning::format_trace_csv(result.fine.trace));
}

}  // namespace qrank::protocol
