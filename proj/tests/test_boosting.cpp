#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracle.hpp"
#include "qrank/boosting.hpp"
#include "qrank/error.hpp"
#include "qrank/pairwise.hpp"
#include "qrank/synthgen.hpp"

using namespace qrank;
using namespace qrank::boosting;
using doctest::Approx;

namespace {

synth::Generated single_feature(std::size_t queries, std::size_t dim, double noise = 0.0, std::uint64_t seed = 42) {
  synth::GenSpec spec;
  spec.queries = queries;
  spec.dim = dim;
  spec.scenario = synth::Scenario::single_feature;
  spec.noise_rate = noise;
  spec.seed = seed;
  return synth::generate(spec);
}

// Largest weighted pair agreement over every feature, midpoint threshold and direction.
double exhaustive_best_r(const Dataset& ds, const std::vector<DatasetPair>& pairs, const std::vector<double>& mass) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < ds.dim; ++f) {
    std::vector<double> vals;
    for (const auto& g : ds.groups)
      for (const auto& c : g.candidates) vals.push_back(c.features[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double thr = (vals[i] + vals[i + 1]) / 2;
      for (int dir : {1, -1}) {
        double r = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          const auto& g = ds.groups[pairs[p].group];
          const double xu = g.candidates[pairs[p].sample.u].features[f];
          const double xv = g.candidates[pairs[p].sample.v].features[f];
          const double hu = dir * xu > dir * thr ? 1 : 0;
          const double hv = dir * xv > dir * thr ? 1 : 0;
          r += mass[p] * (hu - hv);
        }
        best = std::max(best, r);
      }
    }
  }
  return best;
}

double exp_loss(const BoostEnsemble& m, const Dataset& ds, const std::vector<DatasetPair>& pairs) {
  double s = 0.0;
  for (const auto& p : pairs) {
    const auto& g = ds.groups[p.group];
    s += std::exp(-(score_ensemble(m, g.candidates[p.sample.u].features) -
                    score_ensemble(m, g.candidates[p.sample.v].features)));
  }
  return s;
}

}  // namespace

TEST_CASE("ensemble scoring") {
  BoostEnsemble m;
  m.dim = 3;
  const std::vector<double> x{0.5, -1.0, 2.0};
  CHECK(score_ensemble(m, x) == 0.0);
  m.terms.push_back({2.0, 1, Stump{1, 0.0, 1}});
  CHECK(score_ensemble(m, x) == 2.0);
  m.terms.push_back({0.5, 2, Stump{2, 0.0, -1}});
  m.terms.push_back({-0.25, 3, std::nullopt});
  CHECK(score_ensemble(m, x) == Approx(2.0 * 1 + 0.5 * 1 - 0.25 * 2.0));
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(score_ensemble(m, bad), DataError);
}

TEST_CASE("boost alpha") {
  CHECK(boost_alpha(0.0) == 0.0);
  CHECK(boost_alpha(0.5) == Approx(0.5 * std::log(3.0)));
  CHECK(std::isfinite(boost_alpha(1.0)));
  CHECK(boost_alpha(1.0) == boost_alpha(2.0));
  CHECK(boost_alpha(-1.0) == -boost_alpha(1.0));
}

TEST_CASE("stump search matches exhaustive search") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    auto ds = oracle::random_dataset(gen, 6, 6, 3, 2);
    const auto pairs = generate_pairs(ds);
    if (pairs.empty()) continue;
    std::vector<double> mass(pairs.size());
    double total = 0;
    for (auto& v : mass) total += v = ud(gen);
    for (auto& v : mass) v /= total;
    const auto choice = best_stump(ds, pairs, mass);
    REQUIRE(choice.has_value());
    CHECK(choice->r == Approx(exhaustive_best_r(ds, pairs, mass)).epsilon(1e-12));
    double r = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& g = ds.groups[pairs[p].group];
      r += mass[p] * (choice->stump.eval(g.candidates[pairs[p].sample.u].features) -
                      choice->stump.eval(g.candidates[pairs[p].sample.v].features));
    }
    CHECK(r == Approx(choice->r).epsilon(1e-12));
  }
}

TEST_CASE("perfect feature: one clamped term ranks every pair") {
  Dataset ds;
  ds.dim = 3;
  for (Qid q = 1; q <= 3; ++q) {
    QueryGroup g{q, {}};
    for (int i = 0; i < 4; ++i)
      g.candidates.push_back({i < 2 ? 1 : 0, q, {0.1 * ((i * 3) % 4), i < 2 ? 1.0 + 0.1 * i : -1.0 - 0.1 * q, 0.3 * q}, {}});
    ds.groups.push_back(g);
  }
  RankBoostOptions o;
  o.iterations = 1;
  const auto fit = train_rankboost(ds, o, &ds);
  REQUIRE(fit.model.terms.size() == 1);
  CHECK(fit.model.terms[0].fid == 2);
  CHECK(fit.trace.r[0] == Approx(1.0));
  CHECK(fit.model.terms[0].alpha == boost_alpha(1.0));
  const auto pairs = generate_pairs(ds);
  for (const auto& p : pairs) {
    const auto& g = ds.groups[p.group];
    CHECK(score_ensemble(fit.model, g.candidates[p.sample.u].features) >
          score_ensemble(fit.model, g.candidates[p.sample.v].features));
  }
}

TEST_CASE("rankboost needs pairs") {
  Dataset ds;
  ds.dim = 1;
  ds.groups = {{1, {{1, 1, {0.5}, {}}, {1, 1, {0.1}, {}}}}};
  CHECK_THROWS_AS(train_rankboost(ds, RankBoostOptions{}), DataError);
}

TEST_CASE("rankboost exponential loss never increases") {
  const auto gen = single_feature(40, 6, 0.1);
  RankBoostOptions o;
  o.iterations = 50;
  o.select_best_round = false;
  const auto fit = train_rankboost(gen.ds, o, &gen.ds);
  REQUIRE(fit.model.terms.size() == 50);
  const auto pairs = generate_pairs(gen.ds);
  BoostEnsemble partial{BoostKind::rankboost, gen.ds.dim, {}};
  double prev = exp_loss(partial, gen.ds, pairs);
  CHECK(prev == Approx(static_cast<double>(pairs.size())));
  for (std::size_t t = 0; t < 50; ++t) {
    partial.terms.push_back(fit.model.terms[t]);
    const double cur = exp_loss(partial, gen.ds, pairs);
    CHECK(cur <= prev * (1 + 1e-12));
    CHECK(fit.trace.log_loss[t] == Approx(std::log(cur)).epsilon(1e-9));
    CHECK(fit.trace.distribution_sum[t] == Approx(1.0).epsilon(1e-12));
    prev = cur;
  }
  std::vector<double> uniform(pairs.size(), 1.0 / static_cast<double>(pairs.size()));
  CHECK(fit.trace.r[0] == Approx(exhaustive_best_r(gen.ds, pairs, uniform)).epsilon(1e-12));
}

TEST_CASE("rankboost keeps the best validation round") {
  const auto gen = single_feature(40, 6, 0.2);
  RankBoostOptions o;
  o.iterations = 30;
  const auto fit = train_rankboost(gen.ds, o);
  REQUIRE(fit.trace.validation_metric.size() == 30);
  CHECK(fit.model.terms.size() == fit.trace.best_round);
  const auto& vm = fit.trace.validation_metric;
  const auto best = std::max_element(vm.begin(), vm.end());
  CHECK(fit.trace.best_round == static_cast<std::size_t>(best - vm.begin()) + 1);
}

TEST_CASE("adarank picks the planted feature first") {
  const auto gen = single_feature(30, 8);
  // exhaustive scan: mean AP when ranking by each raw feature
  std::size_t best_f = 0;
  double best_map = -1;
  for (std::size_t f = 0; f < gen.ds.dim; ++f) {
    double map = 0;
    for (const auto& g : gen.ds.groups) {
      std::vector<int> labels;
      std::vector<double> s;
      for (const auto& c : g.candidates) {
        labels.push_back(c.label);
        s.push_back(c.features[f]);
      }
      map += oracle::ap(oracle::ranked_labels(labels, s));
    }
    if (map > best_map) {
      best_map = map;
      best_f = f + 1;
    }
  }
  CHECK(best_f == gen.truth.feature);
  CHECK(best_map / 30 == 1.0);

  const auto fit = train_adarank(gen.ds, AdaRankOptions{});
  REQUIRE_FALSE(fit.trace.selected.empty());
  CHECK(fit.trace.selected[0] == best_f);
  CHECK(fit.trace.train_metric[0] == 1.0);
  CHECK(fit.trace.early_stopped);
  CHECK(fit.trace.rounds_executed < 500);
  for (const auto& dist : fit.trace.query_distribution) {
    double s = 0;
    for (double v : dist) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("adarank with infinite tolerance runs one round") {
  const auto gen = single_feature(20, 5, 0.2);
  AdaRankOptions o;
  o.tolerance = std::numeric_limits<double>::infinity();
  const auto fit = train_adarank(gen.ds, o);
  CHECK(fit.trace.rounds_executed == 1);
  CHECK(fit.model.terms.size() == 1);
}

TEST_CASE("adarank per-query feature metrics") {
  const auto gen = single_feature(5, 3);
  const auto e = feature_query_metrics(gen.ds, MetricId::map, 1);
  REQUIRE(e.size() == 5);
  for (std::size_t q = 0; q < 5; ++q) {
    REQUIRE(e[q].size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
      std::vector<int> labels;
      std::vector<double> s;
      for (const auto& c : gen.ds.groups[q].candidates) {
        labels.push_back(c.label);
        s.push_back(c.features[f]);
      }
      CHECK(e[q][f] == Approx(oracle::ap(oracle::ranked_labels(labels, s))).epsilon(1e-12));
    }
  }
}

TEST_CASE("boost model files round-trip") {
  const auto gen = single_feature(20, 5, 0.2);
  RankBoostOptions ro;
  ro.iterations = 10;
  const auto rb = train_rankboost(gen.ds, ro).model;
  CHECK(parse_model(format_model(rb)) == rb);
  const auto ar = train_adarank(gen.ds, AdaRankOptions{}).model;
  CHECK(parse_model(format_model(ar)) == ar);
  CHECK_THROWS_AS(parse_model("boost lambdamart dim=1 terms=0\n"), DataError);
}
