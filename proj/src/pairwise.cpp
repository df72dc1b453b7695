#include "qrank/pairwise.hpp"

#include <algorithm>

#include "qrank/error.hpp"

namespace qrank {

std::vector<PairwiseSample> generate_pairs(const QueryGroup& group) {
  std::vector<PairwiseSample> pairs;
  const auto& c = group.candidates;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (c[i].label > c[j].label) {
        pairs.push_back(PairwiseSample{group.qid, i, j, 1, 1.0});
      } else if (c[j].label > c[i].label) {
        pairs.push_back(PairwiseSample{group.qid, j, i, 1, 1.0});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const PairwiseSample& a, const PairwiseSample& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return pairs;
}

std::vector<DatasetPair> generate_pairs(const Dataset& ds) {
  std::vector<DatasetPair> out;
  for (std::size_t g = 0; g < ds.groups.size(); ++g)
    for (const auto& p : generate_pairs(ds.groups[g])) out.push_back(DatasetPair{g, p});
  return out;
}

namespace {
double pair_credit(double su, double sv) {
  if (su > sv) return 1.0;
  if (su == sv) return 0.5;
  return 0.0;
}
}  // namespace

double pairwise_accuracy(std::span<const double> scores, std::span<const PairwiseSample> pairs) {
  if (pairs.empty()) throw DataError("pairwise accuracy of an empty pair list");
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (p.u >= scores.size() || p.v >= scores.size()) throw DataError("pair index out of range");
    sum += pair_credit(scores[p.u], scores[p.v]);
  }
  return sum / static_cast<double>(pairs.size());
}

double pairwise_accuracy(std::span<const std::vector<double>> scores,
                         std::span<const DatasetPair> pairs) {
  if (pairs.empty()) throw DataError("pairwise accuracy of an empty pair list");
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (p.group >= scores.size()) throw DataError("pair group out of range");
    const auto& s = scores[p.group];
    if (p.sample.u >= s.size() || p.sample.v >= s.size()) throw DataError("pair index out of range");
    sum += pair_credit(s[p.sample.u], s[p.sample.v]);
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace qrank
