#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrank/dataset.hpp"
#include "qrank/pairwise.hpp"

namespace qrank::ranknet {

/// One hidden layer of logistic units and a linear output:
/// f(x) = out_w . sigmoid(hidden_w x + hidden_b) + out_b
struct NeuralNet {
  std::size_t dim = 0;
  std::size_t hidden = 10;
  std::vector<double> hidden_w;  // hidden x dim, row-major
  std::vector<double> hidden_b;
  std::vector<double> out_w;
  double out_b = 0.0;

  static NeuralNet zeros(std::size_t dim, std::size_t hidden = 10);
  /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  static NeuralNet random(std::size_t dim, std::size_t hidden, std::uint64_t seed);

  std::size_t num_parameters() const;
  /// hidden_w, hidden_b, out_w, out_b concatenated.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  bool operator==(const NeuralNet&) const = default;
};

double logistic(double z);

double forward(const NeuralNet& net, std::span<const double> x);

/// Cross-entropy between the target probability and logistic(f(x_u) - f(x_v)).
double pair_loss(const NeuralNet& net, std::span<const double> xu, std::span<const double> xv,
                 double target = 1.0);
double pair_loss(const NeuralNet& net, const QueryGroup& group, const PairwiseSample& pair);

/// Gradient of pair_loss with respect to every parameter, laid out as a net.
NeuralNet pair_loss_gradient(const NeuralNet& net, std::span<const double> xu, std::span<const double> xv,
                             double target = 1.0);

struct RankNetOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.00005;
  std::size_t hidden = 10;
  std::uint64_t seed = 42;
};

struct RankNetFit {
  NeuralNet net;
  /// Mean pair loss before training, then after each epoch.
  std::vector<double> epoch_loss;
};

RankNetFit train_ranknet(const Dataset& ds, const RankNetOptions& opts);

double mean_pair_loss(const NeuralNet& net, const Dataset& ds, std::span<const DatasetPair> pairs);

std::string format_model(const NeuralNet& net);
NeuralNet parse_model(std::string_view text);

}  // namespace qrank::ranknet
