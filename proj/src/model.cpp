#include "qrank/model.hpp"

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank {
namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

double score(const Model& m, std::span<const double> x) {
  return std::visit(overloaded{
                        [&](const ranksvm::LinearModel& v) { return ranksvm::score(v, x); },
                        [&](const ranksvm::KernelModel& v) { return ranksvm::score(v, x); },
                        [&](const boosting::BoostEnsemble& v) { return boosting::score_ensemble(v, x); },
                        [&](const forest::ForestModel& v) { return forest::score_forest(v, x); },
                        [&](const ranknet::NeuralNet& v) { return ranknet::forward(v, x); },
                    },
                    m);
}

std::size_t model_dim(const Model& m) {
  return std::visit(overloaded{
                        [](const ranksvm::LinearModel& v) { return v.dim(); },
                        [](const ranksvm::KernelModel& v) { return v.dim; },
                        [](const boosting::BoostEnsemble& v) { return v.dim; },
                        [](const forest::ForestModel& v) { return v.dim; },
                        [](const ranknet::NeuralNet& v) { return v.dim; },
                    },
                    m);
}

std::vector<std::vector<double>> score_dataset(const Model& m, const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.groups.size());
  for (const auto& g : ds.groups) {
    auto& s = out.emplace_back();
    s.reserve(g.size());
    for (const auto& c : g.candidates) s.push_back(score(m, c.features));
  }
  return out;
}

std::string format_model(const Model& m) {
  return std::visit(overloaded{
                        [](const ranksvm::LinearModel& v) { return ranksvm::format_model(v); },
                        [](const ranksvm::KernelModel& v) { return ranksvm::format_model(v); },
                        [](const boosting::BoostEnsemble& v) { return boosting::format_model(v); },
                        [](const forest::ForestModel& v) { return forest::format_model(v); },
                        [](const ranknet::NeuralNet& v) { return ranknet::format_model(v); },
                    },
                    m);
}

Model parse_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.empty()) throw DataError("empty model file");
  const auto head = textio::split_ws(lines[0]);
  if (head.empty()) throw DataError("empty model header");
  if (head[0] == "ranksvm") {
    if (head.size() > 1 && head[1] == "linear") return ranksvm::parse_linear_model(text);
    return ranksvm::parse_kernel_model(text);
  }
  if (head[0] == "boost") return boosting::parse_model(text);
  if (head[0] == "forest") return forest::parse_model(text);
  if (head[0] == "ranknet") return ranknet::parse_model(text);
  throw DataError("unknown model type '" + std::string(head[0]) + "'");
}

Model load_model(const std::string& path) { return parse_model(textio::read_file(path)); }

void save_model(const Model& m, const std::string& path) { textio::write_file(path, format_model(m)); }

}  // namespace qrank
