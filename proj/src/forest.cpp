#include "qrank/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"
#include "qrank/textio.hpp"

namespace qrank::forest {
namespace {

struct Split {
  double gain = 0.0;
  std::size_t fid = 0;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const std::vector<double>* const> rows, std::span<const double> targets,
              std::span<const std::size_t> features, const TreeOptions& opts)
      : rows_(rows), targets_(targets), features_(features), opts_(opts), node_of_(rows.size(), 0) {
    sorted_.resize(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
      const std::size_t f = features[k] - 1;
      auto& ord = sorted_[k];
      ord.resize(rows.size());
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::size_t a, std::size_t b) { return (*rows[a])[f] < (*rows[b])[f]; });
    }
  }

  RegressionTree build() {
    RegressionTree tree;
    const double sum = std::accumulate(targets_.begin(), targets_.end(), 0.0);
    tree.nodes.push_back(Node{true, 0, 0.0, sum / static_cast<double>(rows_.size()), -1, -1, rows_.size()});
    sums_.push_back(sum);
    splits_.push_back(find_split(0, tree.nodes[0].support, sum));

    std::size_t leaves = 1;
    while (leaves < opts_.max_leaves) {
      int pick = -1;
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.nodes[i].leaf || !splits_[i]) continue;
        if (pick < 0 || splits_[i]->gain > splits_[static_cast<std::size_t>(pick)]->gain) pick = static_cast<int>(i);
      }
      if (pick < 0) break;
      split_node(tree, static_cast<std::size_t>(pick));
      ++leaves;
    }
    return tree;
  }

 private:
  std::optional<Split> find_split(std::size_t node, std::size_t n, double sum) const {
    std::optional<Split> best;
    if (n < 2 * opts_.min_leaf) return best;
    const double nd = static_cast<double>(n);
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const std::size_t f = features_[k] - 1;
      double left_sum = 0.0;
      std::size_t left_n = 0;
      double prev = 0.0;
      for (std::size_t i : sorted_[k]) {
        if (node_of_[i] != node) continue;
        const double v = (*rows_[i])[f];
        if (left_n > 0 && v > prev && left_n >= opts_.min_leaf && n - left_n >= opts_.min_leaf) {
          const double thr = prev + (v - prev) / 2.0;
          if (thr >= prev && thr < v) {
            const double ln = static_cast<double>(left_n);
            const double rn = nd - ln;
            const double diff = left_sum / ln - (sum - left_sum) / rn;
            const double gain = ln * rn / nd * diff * diff;
            if (gain > 1e-12 * nd && (!best || gain > best->gain)) best = Split{gain, f + 1, thr};
          }
        }
        left_sum += targets_[i];
        ++left_n;
        prev = v;
      }
    }
    return best;
  }

  void split_node(RegressionTree& tree, std::size_t node) {
    const Split s = *splits_[node];
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    double lsum = 0.0, rsum = 0.0;
    std::size_t ln = 0, rn = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (node_of_[i] != node) continue;
      if ((*rows_[i])[s.fid - 1] <= s.threshold) {
        node_of_[i] = static_cast<std::size_t>(left);
        lsum += targets_[i];
        ++ln;
      } else {
        node_of_[i] = static_cast<std::size_t>(right);
        rsum += targets_[i];
        ++rn;
      }
    }
    auto& parent = tree.nodes[node];
    parent.leaf = false;
    parent.fid = s.fid;
    parent.threshold = s.threshold;
    parent.left = left;
    parent.right = right;
    tree.nodes.push_back(Node{true, 0, 0.0, lsum / static_cast<double>(ln), -1, -1, ln});
    tree.nodes.push_back(Node{true, 0, 0.0, rsum / static_cast<double>(rn), -1, -1, rn});
    sums_.push_back(lsum);
    sums_.push_back(rsum);
    splits_.push_back(find_split(static_cast<std::size_t>(left), ln, lsum));
    splits_.push_back(find_split(static_cast<std::size_t>(right), rn, rsum));
  }

  std::span<const std::vector<double>* const> rows_;
  std::span<const double> targets_;
  std::span<const std::size_t> features_;
  TreeOptions opts_;
  std::vector<std::size_t> node_of_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<double> sums_;
  std::vector<std::optional<Split>> splits_;
};

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw DataError("feature dimension " + std::to_string(got) + " does not match model dimension " +
                    std::to_string(want));
  }
}

// Sample k of n indices without replacement; returned ascending.
std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[n.fid - 1] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf; }));
}

RegressionTree fit_tree(std::span<const std::vector<double>* const> rows, std::span<const double> targets,
                        std::span<const std::size_t> features, const TreeOptions& opts) {
  if (rows.empty() || rows.size() != targets.size()) throw DataError("tree needs matching non-empty rows and targets");
  if (opts.min_leaf == 0 || opts.max_leaves == 0) throw ConfigError("min_leaf and max_leaves must be >= 1");
  return TreeBuilder(rows, targets, features, opts).build();
}

ForestOptions ForestOptions::desk_scale() {
  ForestOptions o;
  o.bags = 5;
  o.trees_per_bag = 20;
  return o;
}

ForestFit train_forest(const Dataset& ds, const ForestOptions& opts) {
  if (ds.groups.empty()) throw DataError("empty dataset");
  if (!(opts.feature_rate > 0.0 && opts.feature_rate <= 1.0)) throw ConfigError("feature rate must be in (0, 1]");
  if (!(opts.subsample_rate > 0.0 && opts.subsample_rate <= 1.0))
    throw ConfigError("sub-sampling rate must be in (0, 1]");
  if (opts.bags == 0 || opts.trees_per_bag == 0) throw ConfigError("bags and trees per bag must be >= 1");
  if (!(opts.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (ds.dim == 0) throw DataError("dataset has no features");

  std::vector<const std::vector<double>*> all_rows;
  std::vector<double> labels;
  for (const auto& g : ds.groups)
    for (const auto& c : g.candidates) {
      all_rows.push_back(&c.features);
      labels.push_back(static_cast<double>(c.label));
    }
  const std::size_t n = all_rows.size();
  const auto n_sample = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(opts.subsample_rate * static_cast<double>(n) + 1e-9)));
  const auto n_feat = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(opts.feature_rate * static_cast<double>(ds.dim) - 1e-9)), 1, ds.dim);
  const TreeOptions tree_opts{opts.min_leaf, opts.max_leaves};

  ForestFit fit;
  fit.model.dim = ds.dim;
  fit.model.learning_rate = opts.learning_rate;
  fit.model.feature_rate = opts.feature_rate;
  fit.model.subsample_rate = opts.subsample_rate;

  for (std::size_t b = 0; b < opts.bags; ++b) {
    Rng bag_rng(derive_seed(opts.seed, b));
    const auto sample = sample_indices(bag_rng, n, n_sample);
    std::vector<const std::vector<double>*> rows;
    std::vector<double> residual;
    for (auto i : sample) {
      rows.push_back(all_rows[i]);
      residual.push_back(labels[i]);
    }
    auto rss = [&] {
      double s = 0.0;
      for (double r : residual) s += r * r;
      return s;
    };

    std::vector<RegressionTree> trees;
    std::vector<double> bag_rss{rss()};
    std::vector<double> tree_sse, leaf_sse;
    for (std::size_t t = 0; t < opts.trees_per_bag; ++t) {
      Rng tree_rng(derive_seed(opts.seed, b, t + 1));
      std::vector<std::size_t> features = sample_indices(tree_rng, ds.dim, n_feat);
      for (auto& f : features) ++f;
      auto tree = fit_tree(rows, residual, features, tree_opts);

      const double mean = std::accumulate(residual.begin(), residual.end(), 0.0) / static_cast<double>(residual.size());
      double sse = 0.0, base = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double pred = tree.predict(*rows[i]);
        sse += (residual[i] - pred) * (residual[i] - pred);
        base += (residual[i] - mean) * (residual[i] - mean);
        residual[i] -= opts.learning_rate * pred;
      }
      tree_sse.push_back(sse);
      leaf_sse.push_back(base);
      bag_rss.push_back(rss());
      trees.push_back(std::move(tree));
    }
    fit.model.bags.push_back(std::move(trees));
    fit.trace.bag_rss.push_back(std::move(bag_rss));
    fit.trace.tree_sse.push_back(std::move(tree_sse));
    fit.trace.leaf_sse.push_back(std::move(leaf_sse));
  }
  return fit;
}

double score_bag(const ForestModel& m, std::size_t bag, std::span<const double> x) {
  check_dim(x.size(), m.dim);
  double s = 0.0;
  for (const auto& tree : m.bags.at(bag)) s += m.learning_rate * tree.predict(x);
  return s;
}

double score_forest(const ForestModel& m, std::span<const double> x) {
  check_dim(x.size(), m.dim);
  if (m.bags.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t b = 0; b < m.bags.size(); ++b) s += score_bag(m, b, x);
  return s / static_cast<double>(m.bags.size());
}

namespace {

void write_subtree(std::string& out, const RegressionTree& tree, std::size_t i) {
  const auto& n = tree.nodes[i];
  if (n.leaf) {
    out += "leaf v=" + textio::format_real(n.value) + '\n';
    return;
  }
  out += "node fid=" + std::to_string(n.fid) + " thr=" + textio::format_real(n.threshold) + '\n';
  write_subtree(out, tree, static_cast<std::size_t>(n.left));
  write_subtree(out, tree, static_cast<std::size_t>(n.right));
}

class TreeReader {
 public:
  TreeReader(std::span<const std::string_view> lines, std::size_t& pos, std::size_t dim)
      : lines_(lines), pos_(pos), dim_(dim) {}

  RegressionTree read() {
    RegressionTree tree;
    read_node(tree);
    return tree;
  }

 private:
  int read_node(RegressionTree& tree) {
    if (pos_ >= lines_.size()) throw DataError("truncated tree");
    const auto t = textio::split_ws(lines_[pos_++]);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (t.size() == 2 && t[0] == "leaf") {
      auto v = textio::kv_value(t[1], "v");
      auto vv = v ? textio::parse_real(*v) : std::nullopt;
      if (!vv) throw DataError("malformed leaf line");
      tree.nodes[static_cast<std::size_t>(id)].value = *vv;
      return id;
    }
    if (t.size() != 3 || t[0] != "node") throw DataError("expected node or leaf line");
    auto f = textio::kv_value(t[1], "fid");
    auto thr = textio::kv_value(t[2], "thr");
    auto fv = f ? textio::parse_uint(*f) : std::nullopt;
    auto tv = thr ? textio::parse_real(*thr) : std::nullopt;
    if (!fv || *fv == 0 || *fv > dim_ || !tv) throw DataError("malformed node line");
    const int left = read_node(tree);
    const int right = read_node(tree);
    auto& n = tree.nodes[static_cast<std::size_t>(id)];
    n.leaf = false;
    n.fid = static_cast<std::size_t>(*fv);
    n.threshold = *tv;
    n.left = left;
    n.right = right;
    return id;
  }

  std::span<const std::string_view> lines_;
  std::size_t& pos_;
  std::size_t dim_;
};

}  // namespace

std::string format_model(const ForestModel& m) {
  const std::size_t trees = m.bags.empty() ? 0 : m.bags.front().size();
  std::string out = "forest bags=" + std::to_string(m.bags.size()) + " trees=" + std::to_string(trees) +
                    " lr=" + textio::format_real(m.learning_rate) + " dim=" + std::to_string(m.dim) + '\n';
  for (std::size_t b = 0; b < m.bags.size(); ++b) {
    if (m.bags[b].size() != trees) throw DataError("bags hold different tree counts");
    for (std::size_t t = 0; t < m.bags[b].size(); ++t) {
      out += "tree " + std::to_string(b) + '/' + std::to_string(t) + '\n';
      write_subtree(out, m.bags[b][t], 0);
    }
  }
  return out;
}

ForestModel parse_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.empty()) throw DataError("empty model file");
  const auto h = textio::split_ws(lines[0]);
  if (h.size() != 5 || h[0] != "forest") throw DataError("not a forest model header");
  auto b = textio::kv_value(h[1], "bags");
  auto t = textio::kv_value(h[2], "trees");
  auto lr = textio::kv_value(h[3], "lr");
  auto d = textio::kv_value(h[4], "dim");
  auto bv = b ? textio::parse_uint(*b) : std::nullopt;
  auto tv = t ? textio::parse_uint(*t) : std::nullopt;
  auto lv = lr ? textio::parse_real(*lr) : std::nullopt;
  auto dv = d ? textio::parse_uint(*d) : std::nullopt;
  if (!bv || !tv || !lv || !dv) throw DataError("malformed forest header");
  ForestModel m;
  m.dim = static_cast<std::size_t>(*dv);
  m.learning_rate = *lv;
  m.bags.resize(static_cast<std::size_t>(*bv));
  std::size_t pos = 1;
  for (std::size_t bag = 0; bag < m.bags.size(); ++bag) {
    for (std::size_t i = 0; i < *tv; ++i) {
      const std::string expect = "tree " + std::to_string(bag) + '/' + std::to_string(i);
      if (pos >= lines.size() || textio::trim(lines[pos]) != expect)
        throw DataError("expected '" + expect + "'");
      ++pos;
      m.bags[bag].push_back(TreeReader(lines, pos, m.dim).read());
    }
  }
  if (pos != lines.size()) throw DataError("trailing lines after last tree");
  return m;
}

}  // namespace qrank::forest
