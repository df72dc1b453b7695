#include "qrank/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrank/error.hpp"
#include "qrank/textio.hpp"

namespace qrank::boosting {
namespace {

constexpr double kClampEps = 1e-10;

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw DataError("feature dimension " + std::to_string(got) + " does not match model dimension " +
                    std::to_string(want));
  }
}

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Flat candidate indexing shared by the stump search and the training loop.
struct FlatIndex {
  std::vector<std::size_t> offset;  // first flat index of each group
  std::size_t total = 0;

  explicit FlatIndex(const Dataset& ds) {
    for (const auto& g : ds.groups) {
      offset.push_back(total);
      total += g.size();
    }
  }
  std::size_t at(std::size_t group, std::size_t idx) const { return offset[group] + idx; }
};

// Candidates sorted by each feature, computed once per training run.
class StumpSearch {
 public:
  explicit StumpSearch(const Dataset& ds) : ds_(ds), index_(ds) {
    values_.resize(ds.dim);
    order_.resize(ds.dim);
    for (std::size_t f = 0; f < ds.dim; ++f) {
      auto& vals = values_[f];
      vals.reserve(index_.total);
      for (const auto& g : ds.groups)
        for (const auto& c : g.candidates) vals.push_back(c.features[f]);
      auto& ord = order_[f];
      ord.resize(index_.total);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    }
  }

  const FlatIndex& index() const { return index_; }

  // potential[i] = sum of masses of pairs where i is the preferred candidate
  // minus those where it is the other one, so r(t) = sum_i potential[i] [x_i > t].
  std::optional<StumpChoice> best(std::span<const double> potential) const {
    std::optional<StumpChoice> best;
    for (std::size_t f = 0; f < ds_.dim; ++f) {
      const auto& vals = values_[f];
      const auto& ord = order_[f];
      const std::size_t n = ord.size();
      // Walk ascending; `above` is the suffix sum of candidates strictly above t.
      double above = 0.0;
      for (std::size_t i : ord) above += potential[i];
      std::size_t k = 0;
      while (k < n) {
        const double v = vals[ord[k]];
        while (k < n && vals[ord[k]] == v) above -= potential[ord[k++]];
        if (k == n) break;
        const double next = vals[ord[k]];
        const double thr = v + (next - v) / 2.0;
        if (!(thr > v && thr < next)) continue;
        for (int dir : {1, -1}) {
          const double r = dir == 1 ? above : -above;
          if (!best || r > best->r) best = StumpChoice{Stump{f + 1, thr, dir}, r};
        }
      }
    }
    return best;
  }

 private:
  const Dataset& ds_;
  FlatIndex index_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::size_t>> order_;
};

std::vector<double> pair_potential(const FlatIndex& index, std::span<const DatasetPair> pairs,
                                   std::span<const double> mass) {
  std::vector<double> potential(index.total, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    potential[index.at(pairs[p].group, pairs[p].sample.u)] += mass[p];
    potential[index.at(pairs[p].group, pairs[p].sample.v)] -= mass[p];
  }
  return potential;
}

double mean_metric(const Dataset& ds, std::span<const std::vector<double>> scores, MetricId metric,
                   int g_max) {
  double sum = 0.0;
  for (std::size_t q = 0; q < ds.groups.size(); ++q)
    sum += metric_value(rank_by_score(ds.groups[q], scores[q]), metric, g_max);
  return sum / static_cast<double>(ds.groups.size());
}

}  // namespace

double Stump::eval(std::span<const double> x) const {
  const double xv = x[fid - 1];
  return direction * xv > direction * threshold ? 1.0 : 0.0;
}

double Term::eval(std::span<const double> x) const {
  return stump ? stump->eval(x) : x[fid - 1];
}

double score_ensemble(const BoostEnsemble& m, std::span<const double> x) {
  check_dim(x.size(), m.dim);
  double s = 0.0;
  for (const auto& t : m.terms) s += t.alpha * t.eval(x);
  return s;
}

double boost_alpha(double r) {
  const double rc = std::clamp(r, -1.0 + kClampEps, 1.0 - kClampEps);
  return 0.5 * std::log((1.0 + rc) / (1.0 - rc));
}

std::optional<StumpChoice> best_stump(const Dataset& ds, std::span<const DatasetPair> pairs,
                                      std::span<const double> mass) {
  if (mass.size() != pairs.size()) throw DataError("pair mass count mismatch");
  StumpSearch search(ds);
  return search.best(pair_potential(search.index(), pairs, mass));
}

RankBoostFit train_rankboost(const Dataset& train_in, const RankBoostOptions& opts, const Dataset* validation) {
  if (opts.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (opts.holdout_fraction < 0.0 || opts.holdout_fraction >= 1.0)
    throw ConfigError("holdout fraction must be in [0, 1)");
  if (train_in.groups.empty()) throw DataError("empty dataset");

  // Round selection data: explicit set, an internal tail split, or the training data.
  Dataset train_split;
  Dataset holdout;
  const Dataset* train = &train_in;
  const Dataset* val = validation;
  if (!val && opts.holdout_fraction > 0.0 && train_in.groups.size() >= 2) {
    const auto q = train_in.groups.size();
    const auto n_tail = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(opts.holdout_fraction * static_cast<double>(q))), 1, q - 1);
    auto [head, tail] = split_tail(train_in, n_tail);
    if (!generate_pairs(head).empty()) {
      train_split = std::move(head);
      holdout = std::move(tail);
      train = &train_split;
      val = &holdout;
    }
  }
  if (!val) val = train;
  if (val->dim != train->dim) throw DataError("validation dimension does not match training data");

  const auto pairs = generate_pairs(*train);
  if (pairs.empty()) throw DataError("no discordant pairs: nothing to rank");
  const std::size_t n_pairs = pairs.size();
  const int g_max = std::max(train->max_label(), val->max_label());

  StumpSearch search(*train);
  const auto& index = search.index();
  std::vector<double> mass(n_pairs, 1.0 / static_cast<double>(n_pairs));
  std::vector<double> train_scores(index.total, 0.0);
  std::vector<std::vector<double>> val_scores;
  for (const auto& g : val->groups) val_scores.emplace_back(g.size(), 0.0);

  RankBoostFit fit;
  fit.model.kind = BoostKind::rankboost;
  fit.model.dim = train->dim;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::vector<double> margins(n_pairs);

  for (std::size_t round = 0; round < opts.iterations; ++round) {
    const auto choice = search.best(pair_potential(index, pairs, mass));
    if (!choice) break;  // every feature constant
    const double alpha = boost_alpha(choice->r);
    fit.model.terms.push_back(Term{alpha, choice->stump.fid, choice->stump});

    std::size_t flat = 0;
    for (const auto& g : train->groups)
      for (const auto& c : g.candidates) train_scores[flat++] += alpha * choice->stump.eval(c.features);

    double total = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const auto& g = train->groups[pairs[p].group];
      const double dh = choice->stump.eval(g.candidates[pairs[p].sample.u].features) -
                        choice->stump.eval(g.candidates[pairs[p].sample.v].features);
      mass[p] *= std::exp(-alpha * dh);
      total += mass[p];
    }
    double renorm = 0.0;
    for (auto& m : mass) renorm += (m /= total);

    for (std::size_t p = 0; p < n_pairs; ++p) {
      margins[p] = -(train_scores[index.at(pairs[p].group, pairs[p].sample.u)] -
                     train_scores[index.at(pairs[p].group, pairs[p].sample.v)]);
    }
    for (std::size_t q = 0; q < val->groups.size(); ++q)
      for (std::size_t i = 0; i < val->groups[q].size(); ++i)
        val_scores[q][i] += alpha * choice->stump.eval(val->groups[q].candidates[i].features);
    const double metric = mean_metric(*val, val_scores, opts.metric, g_max);

    fit.trace.stumps.push_back(choice->stump);
    fit.trace.r.push_back(choice->r);
    fit.trace.log_loss.push_back(log_sum_exp(margins));
    fit.trace.distribution_sum.push_back(renorm);
    fit.trace.validation_metric.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      fit.trace.best_round = round + 1;
    }
  }
  if (opts.select_best_round) fit.model.terms.resize(fit.trace.best_round);
  else fit.trace.best_round = fit.model.terms.size();
  return fit;
}

std::vector<std::vector<double>> feature_query_metrics(const Dataset& ds, MetricId metric, int g_max) {
  std::vector<std::vector<double>> e(ds.groups.size(), std::vector<double>(ds.dim, 0.0));
  std::vector<double> col;
  for (std::size_t q = 0; q < ds.groups.size(); ++q) {
    const auto& g = ds.groups[q];
    col.resize(g.size());
    for (std::size_t f = 0; f < ds.dim; ++f) {
      for (std::size_t i = 0; i < g.size(); ++i) col[i] = g.candidates[i].features[f];
      e[q][f] = metric_value(rank_by_score(g, col), metric, g_max);
    }
  }
  return e;
}

AdaRankFit train_adarank(const Dataset& ds, const AdaRankOptions& opts) {
  if (ds.groups.empty()) throw DataError("empty dataset");
  if (opts.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (opts.max_consecutive < 1) throw ConfigError("max_consecutive must be >= 1");
  if (ds.dim == 0) throw DataError("dataset has no features");

  const std::size_t nq = ds.groups.size();
  const int g_max = ds.max_label();
  const auto e = feature_query_metrics(ds, opts.metric, g_max);

  std::vector<double> dist(nq, 1.0 / static_cast<double>(nq));
  std::vector<std::vector<double>> scores;
  for (const auto& g : ds.groups) scores.emplace_back(g.size(), 0.0);

  AdaRankFit fit;
  fit.model.kind = BoostKind::adarank;
  fit.model.dim = ds.dim;
  double prev_metric = mean_metric(ds, scores, opts.metric, g_max);
  std::size_t consecutive = 0;
  std::size_t last_fid = 0;
  std::vector<double> per_query(nq);

  for (std::size_t round = 0; round < opts.rounds; ++round) {
    std::size_t best_f = 0;
    double best_w = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < ds.dim; ++f) {
      double w = 0.0;
      for (std::size_t q = 0; q < nq; ++q) w += dist[q] * e[q][f];
      if (w > best_w) {
        best_w = w;
        best_f = f;
      }
    }
    // sum P(1+E) / sum P(1-E) with sum P = 1
    const double alpha = boost_alpha(best_w);
    const std::size_t fid = best_f + 1;
    fit.model.terms.push_back(Term{alpha, fid, std::nullopt});
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t i = 0; i < ds.groups[q].size(); ++i)
        scores[q][i] += alpha * ds.groups[q].candidates[i].features[best_f];

    double metric_sum = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
      per_query[q] = metric_value(rank_by_score(ds.groups[q], scores[q]), opts.metric, g_max);
      metric_sum += per_query[q];
    }
    const double metric = metric_sum / static_cast<double>(nq);

    double total = 0.0;
    for (std::size_t q = 0; q < nq; ++q) total += (dist[q] = std::exp(-per_query[q]));
    for (auto& p : dist) p /= total;

    fit.trace.selected.push_back(fid);
    fit.trace.weighted_score.push_back(best_w);
    fit.trace.train_metric.push_back(metric);
    fit.trace.query_distribution.push_back(dist);
    fit.trace.rounds_executed = round + 1;

    const double delta = metric - prev_metric;
    consecutive = (fid == last_fid && std::abs(delta) <= 1e-12) ? consecutive + 1 : 1;
    last_fid = fid;
    if (delta < opts.tolerance) {
      // A round that did not improve enough is dropped unless it is the only one.
      if (fit.model.terms.size() > 1) fit.model.terms.pop_back();
      fit.trace.early_stopped = true;
      fit.trace.stop_reason = "metric improvement below tolerance";
      break;
    }
    if (consecutive >= opts.max_consecutive) {
      fit.trace.early_stopped = true;
      fit.trace.stop_reason = "feature selected repeatedly without metric change";
      break;
    }
    prev_metric = metric;
  }
  return fit;
}

std::string format_model(const BoostEnsemble& m) {
  std::string out = std::string("boost ") + (m.kind == BoostKind::rankboost ? "rankboost" : "adarank") +
                    " dim=" + std::to_string(m.dim) + " terms=" + std::to_string(m.terms.size()) + '\n';
  for (const auto& t : m.terms) {
    out += "alpha=" + textio::format_real(t.alpha) + " fid=" + std::to_string(t.fid);
    if (t.stump) {
      out += " thr=" + textio::format_real(t.stump->threshold);
      out += t.stump->direction > 0 ? " dir=+1" : " dir=-1";
    }
    out += '\n';
  }
  return out;
}

BoostEnsemble parse_model(std::string_view text) {
  const auto lines = textio::split_lines(text);
  if (lines.empty()) throw DataError("empty model file");
  const auto h = textio::split_ws(lines[0]);
  if (h.size() != 4 || h[0] != "boost") throw DataError("not a boost model header");
  BoostEnsemble m;
  if (h[1] == "rankboost") m.kind = BoostKind::rankboost;
  else if (h[1] == "adarank") m.kind = BoostKind::adarank;
  else throw DataError("unknown boost kind '" + std::string(h[1]) + "'");
  auto dim = textio::kv_value(h[2], "dim");
  auto terms = textio::kv_value(h[3], "terms");
  auto dv = dim ? textio::parse_uint(*dim) : std::nullopt;
  auto tv = terms ? textio::parse_uint(*terms) : std::nullopt;
  if (!dv || !tv) throw DataError("malformed boost header");
  m.dim = static_cast<std::size_t>(*dv);
  if (lines.size() != *tv + 1) throw DataError("term count does not match header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto t = textio::split_ws(lines[i]);
    const bool stump = m.kind == BoostKind::rankboost;
    if (t.size() != (stump ? 4u : 2u)) throw DataError("malformed term line " + std::to_string(i));
    auto a = textio::kv_value(t[0], "alpha");
    auto f = textio::kv_value(t[1], "fid");
    auto av = a ? textio::parse_real(*a) : std::nullopt;
    auto fv = f ? textio::parse_uint(*f) : std::nullopt;
    if (!av || !fv || *fv == 0 || *fv > m.dim) throw DataError("malformed term line " + std::to_string(i));
    Term term{*av, static_cast<std::size_t>(*fv), std::nullopt};
    if (stump) {
      auto thr = textio::kv_value(t[2], "thr");
      auto dir = textio::kv_value(t[3], "dir");
      auto thv = thr ? textio::parse_real(*thr) : std::nullopt;
      if (!thv || !dir || (*dir != "+1" && *dir != "-1"))
        throw DataError("malformed stump on line " + std::to_string(i));
      term.stump = Stump{term.fid, *thv, *dir == "+1" ? 1 : -1};
    }
    m.terms.push_back(term);
  }
  return m;
}

}  // namespace qrank::boosting
