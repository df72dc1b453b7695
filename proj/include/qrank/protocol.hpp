#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrank/dataset.hpp"
#include "qrank/tuning.hpp"

namespace qrank::protocol {

/// The end-to-end model-selection workflow: group flat records into queries,
/// hold out the trailing queries, compare the five rankers, then tune the
/// RankSVM kernel and trade-off parameter on the held-out queries.
struct ProtocolOptions {
  std::size_t group_size = 10;
  std::size_t tail = 50;
  bool desk_scale = true;
  std::uint64_t seed = 42;
  double comparison_c = 3.0;  // RankSVM C for the method and kernel comparisons
  tuning::TuningConfig tuning;
};

struct ProtocolResult {
  std::size_t train_queries = 0;
  std::size_t eval_queries = 0;
  tuning::SweepResult methods;
  tuning::SweepResult kernels;
  tuning::SweepResult coarse;
  tuning::FineSearchResult fine;
};

ProtocolResult run_protocol(const Dataset& train, const Dataset& eval, const ProtocolOptions& opts);
/// Groups `records` with opts.group_size, splits off opts.tail queries and runs.
ProtocolResult run_protocol(std::span<const FlatRecord> records, const ProtocolOptions& opts);

/// Writes methods.txt, kernels.txt, coarse_c.txt, fine_c.txt and fine_trace.csv
/// into `dir` (which must exist).
void write_reports(const ProtocolResult& result, const std::string& dir);

}  // namespace qrank::protocol
