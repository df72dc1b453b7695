#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qrank/boosting.hpp"
#include "qrank/dataset.hpp"
#include "qrank/forest.hpp"
#include "qrank/ranknet.hpp"
#include "qrank/ranksvm.hpp"

namespace qrank {

/// Any trained ranker.
using Model = std::variant<ranksvm::LinearModel, ranksvm::KernelModel, boosting::BoostEnsemble,
                           forest::ForestModel, ranknet::NeuralNet>;

double score(const Model& m, std::span<const double> x);
std::size_t model_dim(const Model& m);

/// Per-group score vectors for a whole dataset.
std::vector<std::vector<double>> score_dataset(const Model& m, const Dataset& ds);

std::string format_model(const Model& m);
/// Dispatches on the header's first token.
Model parse_model(std::string_view text);

Model load_model(const std::string& path);
void save_model(const Model& m, const std::string& path);

}  // namespace qrank
