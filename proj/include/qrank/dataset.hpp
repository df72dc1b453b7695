#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qrank {

using Qid = std::uint64_t;

/// One query-candidate feature vector. `features[j]` holds feature id j + 1.
struct Candidate {
  int label = 0;
  Qid qid = 0;
  std::vector<double> features;
  std::optional<std::string> comment;

  bool operator==(const Candidate&) const = default;
};

/// All candidates of one query, in file order.
struct QueryGroup {
  Qid qid = 0;
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
  bool operator==(const QueryGroup&) const = default;
};

/// Query-grouped ranking data. Every candidate has exactly `dim` features.
struct Dataset {
  std::vector<QueryGroup> groups;
  std::size_t dim = 0;

  std::size_t num_candidates() const;
  int max_label() const;
  bool operator==(const Dataset&) const = default;
};

/// A line of the flat (qid-less) format.
struct FlatRecord {
  int label = 0;
  std::vector<double> features;
  std::optional<std::string> comment;

  bool operator==(const FlatRecord&) const = default;
};

/// Checks the Dataset invariants; throws DataError on the first violation.
void validate(const Dataset& ds);

// Query-grouped format: `<label> qid:<qid> <fid>:<value> ... [# comment]`.
Dataset parse_ranking_text(std::string_view text);
Dataset parse_ranking_file(const std::string& path);
std::string format_ranking_text(const Dataset& ds);
void write_ranking_file(const Dataset& ds, const std::string& path);

// Flat format: the same grammar without the qid token.
std::vector<FlatRecord> parse_flat_text(std::string_view text);
std::vector<FlatRecord> parse_flat_file(const std::string& path);
std::string format_flat_text(std::span<const FlatRecord> records);

/// Groups consecutive blocks of `group_size` records as queries 1, 2, ...
Dataset attach_query_ids(std::span<const FlatRecord> records, std::size_t group_size = 10);

/// Inverse of attach_query_ids.
std::vector<FlatRecord> flatten(const Dataset& ds);

/// Splits off the last `n_tail` query groups: (head, tail).
std::pair<Dataset, Dataset> split_tail(const Dataset& ds, std::size_t n_tail);

/// Per-feature affine standardization fitted on one dataset.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / stddev; 1 for constant features

  static Standardizer fit(const Dataset& ds);
  std::vector<double> apply(std::span<const double> x) const;
  Dataset apply(const Dataset& ds) const;
};

}  // namespace qrank
