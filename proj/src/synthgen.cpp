#include "qrank/synthgen.hpp"

#include <algorithm>
#include <numeric>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"
#include "qrank/textio.hpp"

namespace qrank::synth {

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::linear_utility: return "linear-utility";
    case Scenario::xor_nonlinear: return "xor-nonlinear";
    case Scenario::single_feature: return "single-feature";
    case Scenario::noise: return "noise";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "linear-utility") return Scenario::linear_utility;
  if (name == "xor-nonlinear") return Scenario::xor_nonlinear;
  if (name == "single-feature") return Scenario::single_feature;
  if (name == "noise") return Scenario::noise;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

void GenSpec::validate() const {
  if (queries == 0) throw ConfigError("queries must be >= 1");
  if (group_size == 0) throw ConfigError("group size must be >= 1");
  if (dim == 0) throw ConfigError("dim must be >= 1");
  if (scenario == Scenario::xor_nonlinear && dim < 2) throw ConfigError("xor scenario needs dim >= 2");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw ConfigError("noise rate must be in [0, 1)");
  if (top_k == 0) throw ConfigError("top_k must be >= 1");
}

double GroundTruth::oracle_score(std::span<const double> x) const {
  switch (scenario) {
    case Scenario::linear_utility: {
      double s = 0.0;
      for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
      return s;
    }
    case Scenario::single_feature: return x[feature - 1];
    case Scenario::xor_nonlinear: return x[feature_a - 1] * x[feature_b - 1];
    case Scenario::noise: return 0.0;
  }
  return 0.0;
}

std::string GroundTruth::format() const {
  std::string out = "scenario=" + scenario_name(scenario) + '\n';
  switch (scenario) {
    case Scenario::linear_utility:
      out += 'w';
      for (double v : weights) out += ' ' + textio::format_real(v);
      out += '\n';
      break;
    case Scenario::single_feature: out += "feature=" + std::to_string(feature) + '\n'; break;
    case Scenario::xor_nonlinear:
      out += "features=" + std::to_string(feature_a) + ',' + std::to_string(feature_b) + '\n';
      break;
    case Scenario::noise: break;
  }
  return out;
}

namespace {

// Grades from a within-group utility ranking: best -> 2 (graded) or 1, next
// top_k - 1 -> 1, rest -> 0.
std::vector<int> top_k_labels(std::span<const double> utility, std::size_t top_k, bool graded) {
  std::vector<std::size_t> order(utility.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return utility[a] > utility[b]; });
  std::vector<int> labels(utility.size(), 0);
  for (std::size_t r = 0; r < std::min(top_k, order.size()); ++r) labels[order[r]] = (graded && r == 0) ? 2 : 1;
  return labels;
}

}  // namespace

Generated generate(const GenSpec& spec) {
  spec.validate();
  Rng truth_rng(derive_seed(spec.seed, 1));
  Rng feature_rng(derive_seed(spec.seed, 2));
  Rng noise_rng(derive_seed(spec.seed, 3));

  Generated out;
  out.truth.scenario = spec.scenario;
  switch (spec.scenario) {
    case Scenario::linear_utility:
      out.truth.weights.resize(spec.dim);
      for (auto& w : out.truth.weights) w = truth_rng.normal();
      break;
    case Scenario::single_feature:
      out.truth.feature = 1 + static_cast<std::size_t>(truth_rng.below(spec.dim));
      break;
    case Scenario::xor_nonlinear:
      out.truth.feature_a = 1;
      out.truth.feature_b = 2;
      break;
    case Scenario::noise: break;
  }

  out.ds.dim = spec.dim;
  std::vector<double> utility(spec.group_size);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    QueryGroup g{q + 1, {}};
    for (std::size_t i = 0; i < spec.group_size; ++i) {
      Candidate c{0, g.qid, std::vector<double>(spec.dim), std::nullopt};
      for (auto& v : c.features) v = feature_rng.normal();
      g.candidates.push_back(std::move(c));
    }
    std::vector<int> labels(spec.group_size, 0);
    if (spec.scenario == Scenario::xor_nonlinear) {
      for (std::size_t i = 0; i < spec.group_size; ++i) {
        const double prod = out.truth.oracle_score(g.candidates[i].features);
        labels[i] = prod > 0.0 ? ((spec.graded && prod > 1.0) ? 2 : 1) : 0;
      }
    } else {
      for (std::size_t i = 0; i < spec.group_size; ++i) {
        utility[i] = spec.scenario == Scenario::noise ? feature_rng.uniform()
                                                       : out.truth.oracle_score(g.candidates[i].features);
      }
      labels = top_k_labels(utility, spec.top_k, spec.graded);
    }
    for (std::size_t i = 0; i < spec.group_size; ++i) {
      int label = labels[i];
      if (spec.noise_rate > 0.0 && noise_rng.uniform() < spec.noise_rate) {
        if (spec.graded) {
          const int shift = 1 + static_cast<int>(noise_rng.below(2));
          label = (label + shift) % 3;
        } else {
          label = 1 - label;
        }
      }
      g.candidates[i].label = label;
    }
    out.ds.groups.push_back(std::move(g));
  }
  return out;
}

}  // namespace qrank::synth
