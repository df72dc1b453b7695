#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"

namespace qrank::synth {

enum class Scenario { linear_utility, xor_nonlinear, single_feature, noise };

std::string scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

struct GenSpec {
  std::size_t queries = 267;
  std::size_t group_size = 10;
  std::size_t dim = 64;
  Scenario scenario = Scenario::linear_utility;
  double noise_rate = 0.0;  // fraction of labels flipped
  std::uint64_t seed = 42;
  bool graded = false;  // grades 0-2 instead of 0/1
  std::size_t top_k = 3;  // relevant candidates per group in rank-threshold scenarios

  void validate() const;
};

/// The rule that produced the labels.
///   linear_utility: utility w.x, top_k of each group relevant
///   single_feature: utility x[feature], top_k relevant
///   xor_nonlinear:  relevant iff x[feature_a] and x[feature_b] share a sign
///   noise:          labels independent of the features
struct GroundTruth {
  Scenario scenario = Scenario::linear_utility;
  std::vector<double> weights;
  std::size_t feature = 0;    // 1-based
  std::size_t feature_a = 0;  // 1-based
  std::size_t feature_b = 0;

  /// Score whose ranking reproduces the noise-free labels (0 for noise).
  double oracle_score(std::span<const double> x) const;
  std::string format() const;
};

struct Generated {
  Dataset ds;
  GroundTruth truth;
};

Generated generate(const GenSpec& spec);

}  // namespace qrank::synth
