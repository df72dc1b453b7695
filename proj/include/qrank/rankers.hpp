#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "qrank/boosting.hpp"
#include "qrank/dataset.hpp"
#include "qrank/forest.hpp"
#include "qrank/model.hpp"
#include "qrank/ranknet.hpp"
#include "qrank/ranksvm.hpp"

namespace qrank {

enum class RankerKind { ranksvm, rankboost, ranknet, adarank, rforest };

std::string ranker_name(RankerKind kind);
RankerKind parse_ranker(std::string_view name);

/// Everything needed to train one ranker. Defaults follow the settings the
/// method comparison uses for each ranker.
struct RankerConfig {
  RankerKind kind = RankerKind::ranksvm;
  ranksvm::KernelKind kernel = ranksvm::KernelKind::linear;
  double gamma = 0.0;  // <= 0: 1 / dim
  double coef0 = 0.0;
  ranksvm::SvmOptions svm;
  boosting::RankBoostOptions rankboost;
  boosting::AdaRankOptions adarank;
  forest::ForestOptions forest;
  ranknet::RankNetOptions ranknet;

  /// RankSVM C=3; RankBoost 300 rounds tracked by ERR@10; RankNet 100 epochs,
  /// 10 hidden units, lr 5e-5; AdaRank 500 rounds, tolerance 0.002, 5
  /// consecutive picks; forest 300 bags x 100 trees, lr 0.1, feature rate 0.3.
  /// `desk_scale` shrinks the forest to 5 x 20 and boosting to 50/100 rounds.
  static RankerConfig defaults(RankerKind kind, bool desk_scale = false, std::uint64_t seed = 42);

  ranksvm::Kernel resolved_kernel(std::size_t dim) const;
  /// `key=value` lines with every default resolved.
  std::string describe(std::size_t dim) const;
};

struct TrainOutcome {
  Model model;
  bool converged = true;
};

TrainOutcome train_ranker(const Dataset& ds, const RankerConfig& cfg);

}  // namespace qrank
