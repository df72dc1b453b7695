#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qrank/dataset.hpp"

namespace qrank {

/// Ordered pair within one query with label(u) > label(v); y is always +1.
struct PairwiseSample {
  Qid qid = 0;
  std::size_t u = 0;
  std::size_t v = 0;
  int y = 1;
  double weight = 1.0;

  bool operator==(const PairwiseSample&) const = default;
};

/// One sample per candidate pair with different labels, u then v ascending.
std::vector<PairwiseSample> generate_pairs(const QueryGroup& group);

/// A pair located in a dataset: `group` indexes ds.groups.
struct DatasetPair {
  std::size_t group = 0;
  PairwiseSample sample;
};

std::vector<DatasetPair> generate_pairs(const Dataset& ds);

/// Fraction of pairs with score(u) > score(v); equal scores count one half.
double pairwise_accuracy(std::span<const double> scores, std::span<const PairwiseSample> pairs);

/// Same over a whole dataset; scores[g] scores ds.groups[g].
double pairwise_accuracy(std::span<const std::vector<double>> scores,
                         std::span<const DatasetPair> pairs);

}  // namespace qrank
