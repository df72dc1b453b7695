#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"

namespace qrank::forest {

/// Internal node (x[fid] <= threshold goes left) or leaf.
struct Node {
  bool leaf = true;
  std::size_t fid = 0;  // 1-based
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
  std::size_t support = 0;  // training rows that reached this node; not serialized
};

/// Squared-error regression tree; nodes[0] is the root.
struct RegressionTree {
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  std::size_t num_leaves() const;
};

struct TreeOptions {
  std::size_t min_leaf = 1;
  std::size_t max_leaves = 10;
};

/// Best-first growth: the leaf with the largest squared-error reduction is
/// split next until `max_leaves` or no split reduces the error. Thresholds are
/// midpoints between distinct observed values; ties go to the lowest feature
/// id, then the lowest threshold. `features` are 1-based ids.
RegressionTree fit_tree(std::span<const std::vector<double>* const> rows, std::span<const double> targets,
                        std::span<const std::size_t> features, const TreeOptions& opts);

struct ForestOptions {
  std::size_t bags = 300;
  std::size_t trees_per_bag = 100;
  double learning_rate = 0.1;
  double feature_rate = 0.3;
  double subsample_rate = 1.0;
  std::size_t min_leaf = 1;
  std::size_t max_leaves = 10;
  std::uint64_t seed = 42;

  /// 5 bags x 20 trees, everything else unchanged.
  static ForestOptions desk_scale();
};

/// Bag-mean of boosted regression-tree sums.
struct ForestModel {
  std::size_t dim = 0;
  double learning_rate = 0.1;
  double feature_rate = 0.3;
  double subsample_rate = 1.0;
  std::vector<std::vector<RegressionTree>> bags;
};

struct ForestTrace {
  /// Per bag: residual sum of squares before any tree, then after each tree.
  std::vector<std::vector<double>> bag_rss;
  /// Per bag and tree: squared error of the fitted tree and of a single leaf
  /// on the same residual targets.
  std::vector<std::vector<double>> tree_sse;
  std::vector<std::vector<double>> leaf_sse;
};

struct ForestFit {
  ForestModel model;
  ForestTrace trace;
};

ForestFit train_forest(const Dataset& ds, const ForestOptions& opts);

double score_bag(const ForestModel& m, std::size_t bag, std::span<const double> x);
double score_forest(const ForestModel& m, std::span<const double> x);

std::string format_model(const ForestModel& m);
ForestModel parse_model(std::string_view text);

}  // namespace qrank::forest
