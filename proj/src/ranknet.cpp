#include "qrank/ranknet.hpp"

#include <cmath>
#include <numeric>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"
#include "qrank/textio.hpp"

namespace qrank::ranknet {
namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_dim(const NeuralNet& net, std::size_t got) {
  if (got != net.dim) {
    throw DataError("feature dimension " + std::to_string(got) + " does not match model dimension " +
                    std::to_string(net.dim));
  }
}

// Accumulates scale * df(x)/dtheta into grad.
void accumulate_output_gradient(const NeuralNet& net, std::span<const double> x, double scale, NeuralNet& grad) {
  for (std::size_t j = 0; j < net.hidden; ++j) {
    double a = net.hidden_b[j];
    const double* row = net.hidden_w.data() + j * net.dim;
    for (std::size_t k = 0; k < net.dim; ++k) a += row[k] * x[k];
    const double h = logistic(a);
    grad.out_w[j] += scale * h;
    const double back = scale * net.out_w[j] * h * (1.0 - h);
    grad.hidden_b[j] += back;
    double* grow = grad.hidden_w.data() + j * net.dim;
    for (std::size_t k = 0; k < net.dim; ++k) grow[k] += back * x[k];
  }
  grad.out_b += scale;
}

}  // namespace

NeuralNet NeuralNet::zeros(std::size_t dim, std::size_t hidden) {
  if (hidden == 0) throw ConfigError("hidden layer needs at least one unit");
  NeuralNet net;
  net.dim = dim;
  net.hidden = hidden;
  net.hidden_w.assign(hidden * dim, 0.0);
  net.hidden_b.assign(hidden, 0.0);
  net.out_w.assign(hidden, 0.0);
  return net;
}

NeuralNet NeuralNet::random(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  NeuralNet net = zeros(dim, hidden);
  Rng rng(seed);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1)));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : net.hidden_w) w = rng.uniform(-b1, b1);
  for (auto& w : net.hidden_b) w = rng.uniform(-b1, b1);
  for (auto& w : net.out_w) w = rng.uniform(-b2, b2);
  net.out_b = rng.uniform(-b2, b2);
  return net;
}

std::size_t NeuralNet::num_parameters() const { return hidden_w.size() + hidden_b.size() + out_w.size() + 1; }

std::vector<double> NeuralNet::parameters() const {
  std::vector<double> p;
  p.reserve(num_parameters());
  p.insert(p.end(), hidden_w.begin(), hidden_w.end());
  p.insert(p.end(), hidden_b.begin(), hidden_b.end());
  p.insert(p.end(), out_w.begin(), out_w.end());
  p.push_back(out_b);
  return p;
}

void NeuralNet::set_parameters(std::span<const double> p) {
  if (p.size() != num_parameters()) throw DataError("parameter count mismatch");
  auto it = p.begin();
  for (auto& w : hidden_w) w = *it++;
  for (auto& w : hidden_b) w = *it++;
  for (auto& w : out_w) w = *it++;
  out_b = *it;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double forward(const NeuralNet& net, std::span<const double> x) {
  check_dim(net, x.size());
  double f = net.out_b;
  for (std::size_t j = 0; j < net.hidden; ++j) {
    double a = net.hidden_b[j];
    const double* row = net.hidden_w.data() + j * net.dim;
    for (std::size_t k = 0; k < net.dim; ++k) a += row[k] * x[k];
    f += net.out_w[j] * logistic(a);
  }
  return f;
}

// -P log s(d) - (1-P) log(1 - s(d)) = P softplus(-d) + (1-P) softplus(d)
double pair_loss(const NeuralNet& net, std::span<const double> xu, std::span<const double> xv, double target) {
  const double d = forward(net, xu) - forward(net, xv);
  return target * softplus(-d) + (1.0 - target) * softplus(d);
}

double pair_loss(const NeuralNet& net, const QueryGroup& group, const PairwiseSample& pair) {
  return pair_loss(net, group.candidates.at(pair.u).features, group.candidates.at(pair.v).features, 1.0);
}

NeuralNet pair_loss_gradient(const NeuralNet& net, std::span<const double> xu, std::span<const double> xv,
                             double target) {
  const double d = forward(net, xu) - forward(net, xv);
  const double dl_dd = logistic(d) - target;
  NeuralNet grad = NeuralNet::zeros(net.dim, net.hidden);
  accumulate_output_gradient(net, xu, dl_dd, grad);
  accumulate_output_gradient(net, xv, -dl_dd, grad);
  return grad;
}

double mean_pair_loss(const NeuralNet& net, const Dataset& ds, std::span<const DatasetPair> pairs) {
  if (pairs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : pairs) s += pair_loss(net, ds.groups[p.group], p.sample);
  return s / static_cast<double>(pairs.size());
}

RankNetFit train_ranknet(const Dataset& ds, const RankNetOptions& opts) {
  if (!(opts.learning_rate >= 0.0) || !std::isfinite(opts.learning_rate))
    throw ConfigError("learning rate must be a finite non-negative value");
  const auto pairs = generate_pairs(ds);
  if (pairs.empty()) throw DataError("no discordant pairs: nothing to rank");

  RankNetFit fit;
  fit.net = NeuralNet::random(ds.dim, opts.hidden, derive_seed(opts.seed, 0));
  fit.epoch_loss.push_back(mean_pair_loss(fit.net, ds, pairs));

  Rng order_rng(derive_seed(opts.seed, 1));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = fit.net.parameters();

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      const auto& p = pairs[idx];
      const auto& g = ds.groups[p.group];
      const auto grad = pair_loss_gradient(fit.net, g.candidates[p.sample.u].features,
                                           g.candidates[p.sample.v].features, 1.0)
                            .parameters();
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= opts.learning_rate * grad[i];
        if (!std::isfinite(params[i])) throw Error("RankNet weights diverged; lower the learning rate");
      }
      fit.net.set_parameters(params);
    }
    fit.epoch_loss.push_back(mean_pair_loss(fit.net, ds, pairs));
  }
  return fit;
}

std::string format_model(const NeuralNet& net) {
  auto line = [](std::string_view key, std::span<const double> v) {
    std::string s(key);
    for (double x : v) s += ' ' + textio::format_real(x);
    return s + '\n';
  };
  std::string out = "ranknet dim=" + std::to_string(net.dim) + " hidden=" + std::to_string(net.hidden) + '\n';
  out += line("hidden_w", net.hidden_w);
  out += line("hidden_b", net.hidden_b);
  out += line("out_w", net.out_w);
  out += "out_b " + textio::format_real(net.out_b) + '\n';
  return out;
}

NeuralNet parse_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.size() != 5) throw DataError("ranknet model needs a header and four weight lines");
  const auto h = textio::split_ws(lines[0]);
  if (h.size() != 3 || h[0] != "ranknet") throw DataError("not a ranknet model header");
  auto d = textio::kv_value(h[1], "dim");
  auto hid = textio::kv_value(h[2], "hidden");
  auto dv = d ? textio::parse_uint(*d) : std::nullopt;
  auto hv = hid ? textio::parse_uint(*hid) : std::nullopt;
  if (!dv || !hv || *hv == 0) throw DataError("malformed ranknet header");
  NeuralNet net = NeuralNet::zeros(static_cast<std::size_t>(*dv), static_cast<std::size_t>(*hv));
  auto read = [&](std::size_t li, std::string_view key, std::vector<double>& dst) {
    const auto t = textio::split_ws(lines[li]);
    if (t.empty() || t[0] != key || t.size() != dst.size() + 1)
      throw DataError("malformed '" + std::string(key) + "' line");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto v = textio::parse_real(t[i + 1]);
      if (!v) throw DataError("invalid weight in '" + std::string(key) + "' line");
      dst[i] = *v;
    }
  };
  read(1, "hidden_w", net.hidden_w);
  read(2, "hidden_b", net.hidden_b);
  read(3, "out_w", net.out_w);
  std::vector<double> ob(1);
  read(4, "out_b", ob);
  net.out_b = ob[0];
  return net;
}

}  // namespace qrank::ranknet
