#include "qrank/rankers.hpp"

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank {

std::string ranker_name(RankerKind kind) {
  switch (kind) {
    case RankerKind::ranksvm: return "ranksvm";
    case RankerKind::rankboost: return "rankboost";
    case RankerKind::ranknet: return "ranknet";
    case RankerKind::adarank: return "adarank";
    case RankerKind::rforest: return "rforest";
  }
  return "?";
}

RankerKind parse_ranker(std::string_view name) {
  if (name == "ranksvm") return RankerKind::ranksvm;
  if (name == "rankboost") return RankerKind::rankboost;
  if (name == "ranknet") return RankerKind::ranknet;
  if (name == "adarank") return RankerKind::adarank;
  if (name == "rforest") return RankerKind::rforest;
  throw ConfigError("unknown ranker '" + std::string(name) + "'");
}

RankerConfig RankerConfig::defaults(RankerKind kind, bool desk_scale, std::uint64_t seed) {
  RankerConfig cfg;
  cfg.kind = kind;
  cfg.svm.c = 3.0;
  cfg.svm.seed = seed;
  cfg.forest.seed = seed;
  cfg.ranknet.seed = seed;
  if (desk_scale) {
    cfg.forest = forest::ForestOptions::desk_scale();
    cfg.forest.seed = seed;
    cfg.rankboost.iterations = 50;
    cfg.adarank.rounds = 100;
  }
  return cfg;
}

ranksvm::Kernel RankerConfig::resolved_kernel(std::size_t dim) const {
  auto k = ranksvm::Kernel::with_defaults(kernel, dim);
  if (gamma > 0.0) k.gamma = gamma;
  k.coef0 = coef0;
  return k;
}

std::string RankerConfig::describe(std::size_t dim) const {
  using textio::format_real;
  std::string out = "ranker=" + ranker_name(kind) + '\n';
  switch (kind) {
    case RankerKind::ranksvm: {
      const auto k = resolved_kernel(dim);
      out += "kernel=" + ranksvm::kernel_name(k.kind) + '\n';
      out += "c=" + format_real(svm.c) + '\n';
      if (k.kind != ranksvm::KernelKind::linear) {
        out += "gamma=" + format_real(k.gamma) + '\n';
        out += "coef0=" + format_real(k.coef0) + '\n';
      }
      out += "tol=" + format_real(svm.tol) + '\n';
      out += "max_iters=" + std::to_string(svm.max_iters) + '\n';
      out += std::string("standardize=") + (svm.standardize ? "1" : "0") + '\n';
      out += "seed=" + std::to_string(svm.seed) + '\n';
      break;
    }
    case RankerKind::rankboost:
      out += "iterations=" + std::to_string(rankboost.iterations) + '\n';
      out += "metric=" + metric_name(rankboost.metric) + '\n';
      out += "holdout_fraction=" + format_real(rankboost.holdout_fraction) + '\n';
      break;
    case RankerKind::adarank:
      out += "rounds=" + std::to_string(adarank.rounds) + '\n';
      out += "tolerance=" + format_real(adarank.tolerance) + '\n';
      out += "max_consecutive=" + std::to_string(adarank.max_consecutive) + '\n';
      out += "metric=" + metric_name(adarank.metric) + '\n';
      break;
    case RankerKind::ranknet:
      out += "epochs=" + std::to_string(ranknet.epochs) + '\n';
      out += "hidden=" + std::to_string(ranknet.hidden) + '\n';
      out += "learning_rate=" + format_real(ranknet.learning_rate) + '\n';
      out += "seed=" + std::to_string(ranknet.seed) + '\n';
      break;
    case RankerKind::rforest:
      out += "bags=" + std::to_string(forest.bags) + '\n';
      out += "trees_per_bag=" + std::to_string(forest.trees_per_bag) + '\n';
      out += "learning_rate=" + format_real(forest.learning_rate) + '\n';
      out += "feature_rate=" + format_real(forest.feature_rate) + '\n';
      out += "subsample_rate=" + format_real(forest.subsample_rate) + '\n';
      out += "min_leaf=" + std::to_string(forest.min_leaf) + '\n';
      out += "max_leaves=" + std::to_string(forest.max_leaves) + '\n';
      out += "seed=" + std::to_string(forest.seed) + '\n';
      break;
  }
  return out;
}

TrainOutcome train_ranker(const Dataset& ds, const RankerConfig& cfg) {
  switch (cfg.kind) {
    case RankerKind::ranksvm: {
      if (cfg.kernel == ranksvm::KernelKind::linear) {
        auto fit = ranksvm::train_linear(ds, cfg.svm);
        return {fit.model, fit.state.converged};
      }
      auto fit = ranksvm::train_kernel(ds, cfg.resolved_kernel(ds.dim), cfg.svm);
      return {fit.model, fit.state.converged};
    }
    case RankerKind::rankboost: return {boosting::train_rankboost(ds, cfg.rankboost).model, true};
    case RankerKind::adarank: return {boosting::train_adarank(ds, cfg.adarank).model, true};
    case RankerKind::ranknet: return {ranknet::train_ranknet(ds, cfg.ranknet).net, true};
    case RankerKind::rforest: return {forest::train_forest(ds, cfg.forest).model, true};
  }
  throw ConfigError("unknown ranker");
}

}  // namespace qrank
