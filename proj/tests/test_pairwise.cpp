#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "qrank/error.hpp"
#include "qrank/pairwise.hpp"

using namespace qrank;

namespace {

QueryGroup group_with(const std::vector<int>& labels) {
  QueryGroup g;
  g.qid = 1;
  for (int l : labels) g.candidates.push_back({l, 1, {0.0}, {}});
  return g;
}

}  // namespace

TEST_CASE("pairs for labels 1 1 0") {
  const auto p = generate_pairs(group_with({1, 1, 0}));
  REQUIRE(p.size() == 2);
  CHECK(p[0].u == 0);
  CHECK(p[0].v == 2);
  CHECK(p[1].u == 1);
  CHECK(p[1].v == 2);
  CHECK(p[0].y == 1);
  CHECK(p[0].weight == 1.0);
}

TEST_CASE("no pairs without discordance") { CHECK(generate_pairs(group_with({0, 0, 0})).empty()); }

TEST_CASE("graded labels 2 1 0") {
  const auto p = generate_pairs(group_with({2, 1, 0}));
  REQUIRE(p.size() == 3);
  for (const auto& s : p) CHECK(s.u < s.v);
}

TEST_CASE("pair count and orientation match brute force") {
  std::mt19937_64 gen(9);
  const auto ds = oracle::random_dataset(gen, 200, 12, 1, 3);
  std::size_t total = 0;
  for (const auto& g : ds.groups) {
    std::vector<int> labels;
    for (const auto& c : g.candidates) labels.push_back(c.label);
    const auto p = generate_pairs(g);
    CHECK(p.size() == oracle::discordant_pairs(labels));
    for (const auto& s : p) CHECK(labels[s.u] > labels[s.v]);
    total += p.size();
  }
  CHECK(generate_pairs(ds).size() == total);
}

TEST_CASE("pairwise accuracy") {
  const auto g = group_with({2, 1, 0});
  const auto p = generate_pairs(g);
  const std::vector<double> good{3, 2, 1};
  CHECK(pairwise_accuracy(good, p) == 1.0);
  const std::vector<double> flat{1, 1, 1};
  CHECK(pairwise_accuracy(flat, p) == 0.5);
  // (0,1) wrong, (0,2) right, (1,2) tie
  const std::vector<double> mixed{1.0, 2.0, 1.0};
  CHECK(pairwise_accuracy(mixed, p) == doctest::Approx(0.5));
  const std::vector<double> other{0.2, 0.1, 0.7};
  CHECK(pairwise_accuracy(other, p) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(pairwise_accuracy(good, std::span<const PairwiseSample>{}), DataError);
}
