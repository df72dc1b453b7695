#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "qrank/error.hpp"
#include "qrank/metrics.hpp"
#include "qrank/pairwise.hpp"
#include "qrank/ranksvm.hpp"
#include "qrank/synthgen.hpp"

using namespace qrank;
using namespace qrank::ranksvm;
using doctest::Approx;

namespace {

template <typename M>
std::vector<std::vector<double>> score_all(const M& m, const Dataset& ds) {
  std::vector<std::vector<double>> out;
  for (const auto& g : ds.groups) {
    std::vector<double> s;
    for (const auto& c : g.candidates) s.push_back(score(m, c.features));
    out.push_back(s);
  }
  return out;
}

double objective_ref(const Dataset& ds, const std::vector<double>& w, double c) {
  double hinge = 0.0, n_pairs = 0.0;
  for (const auto& g : ds.groups)
    for (const auto& a : g.candidates)
      for (const auto& b : g.candidates) {
        if (a.label <= b.label) continue;
        double m = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * (a.features[j] - b.features[j]);
        hinge += std::max(0.0, 1.0 - m);
        n_pairs += 1.0;
      }
  double ww = 0.0;
  for (double v : w) ww += v * v;
  return 0.5 * ww + c / n_pairs * hinge;
}

Dataset monotone_1d() {
  Dataset ds;
  ds.dim = 1;
  for (Qid q = 1; q <= 4; ++q) {
    QueryGroup g{q, {}};
    for (int i = 0; i < 5; ++i) g.candidates.push_back({i >= 3 ? 1 : 0, q, {0.3 * i + 0.1 * q}, {}});
    ds.groups.push_back(g);
  }
  return ds;
}

synth::Generated linear_data(std::size_t queries, std::size_t dim, std::uint64_t seed) {
  synth::GenSpec spec;
  spec.queries = queries;
  spec.dim = dim;
  spec.seed = seed;
  return synth::generate(spec);
}

}  // namespace

TEST_CASE("kernel evaluation") {
  const std::vector<double> ones{1, 1};
  CHECK(kernel_eval(Kernel{KernelKind::linear, 1, 0}, ones, ones) == 2.0);
  CHECK(kernel_eval(Kernel{KernelKind::rbf, 0.7, 0}, ones, ones) == 1.0);
  const std::vector<double> a{0}, b{1};
  CHECK(kernel_eval(Kernel{KernelKind::rbf, 1, 0}, a, b) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_eval(Kernel{KernelKind::sigmoid, 0.5, 0.25}, ones, ones) == Approx(std::tanh(1.25)));
  CHECK(Kernel::with_defaults(KernelKind::rbf, 64).gamma == Approx(1.0 / 64));
  CHECK(parse_kernel("sigmoid") == KernelKind::sigmoid);
  CHECK_THROWS_AS(parse_kernel("poly"), ConfigError);
}

TEST_CASE("linear scoring") {
  LinearModel m;
  m.w = {1, -1};
  const std::vector<double> x{3, 1}, zero{0, 0};
  CHECK(score(m, x) == 2.0);
  CHECK(score(m, zero) == 0.0);
  const std::vector<double> bad{1};
  CHECK_THROWS_AS(score(m, bad), DataError);
}

TEST_CASE("monotone 1-D data gives a positive weight") {
  const auto ds = monotone_1d();
  const auto fit = train_linear(ds, SvmOptions{});
  CHECK(fit.model.w[0] > 0.0);
  CHECK(pairwise_accuracy(score_all(fit.model, ds), generate_pairs(ds)) == 1.0);
  // brute-force constraint check: every pair is ordered by w
  for (const auto& g : ds.groups)
    for (const auto& a : g.candidates)
      for (const auto& b : g.candidates)
        if (a.label > b.label) CHECK(score(fit.model, a.features) > score(fit.model, b.features));
}

TEST_CASE("no discordant pairs is an error") {
  Dataset ds;
  ds.dim = 1;
  ds.groups = {{1, {{1, 1, {0.5}, {}}, {1, 1, {0.1}, {}}}}};
  CHECK_THROWS_AS(train_linear(ds, SvmOptions{}), DataError);
  CHECK_THROWS_AS(train_kernel(ds, Kernel{}, SvmOptions{}), DataError);
}

TEST_CASE("invalid options") {
  const auto ds = monotone_1d();
  SvmOptions o;
  o.c = 0;
  CHECK_THROWS_AS(train_linear(ds, o), ConfigError);
  o = SvmOptions{};
  o.standardize = true;
  CHECK_THROWS_AS(train_kernel(ds, Kernel{}, o), ConfigError);
}

TEST_CASE("linear-utility data, c=15, held-out MAP") {
  const auto gen = linear_data(70, 5, 42);
  const auto [train, eval] = split_tail(gen.ds, 20);
  SvmOptions o;
  o.c = 15;
  const auto fit = train_linear(train, o);
  CHECK(fit.state.converged);
  const auto rep = evaluate_run(eval, score_all(fit.model, eval));
  CHECK(rep.aggregate.ap >= 0.95);
}

TEST_CASE("solution is a minimum of the primal") {
  const auto gen = linear_data(15, 4, 3);
  SvmOptions o;
  o.c = 5;
  o.tol = 1e-9;
  const auto fit = train_linear(gen.ds, o);
  const double f0 = objective_ref(gen.ds, fit.model.w, o.c);
  CHECK(fit.model.objective == Approx(f0).epsilon(1e-12));
  CHECK(linear_objective(gen.ds, fit.model.w, o.c) == Approx(f0).epsilon(1e-12));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1e-3);
  for (int rep = 0; rep < 200; ++rep) {
    auto w = fit.model.w;
    for (auto& v : w) v += nd(rng);
    CHECK(objective_ref(gen.ds, w, o.c) >= f0 - 1e-8 * f0);
  }
}

TEST_CASE("traces and slacks") {
  const auto gen = linear_data(20, 5, 8);
  SvmOptions o;
  o.c = 30;
  const auto fit = train_linear(gen.ds, o);
  const auto& tr = fit.state.objective_trace;
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] <= tr[i - 1] * (1 + 1e-9));
  const auto& du = fit.state.dual_trace;
  for (std::size_t i = 1; i < du.size(); ++i) CHECK(du[i] >= du[i - 1] - 1e-12);
  CHECK(du.back() <= tr.back() + 1e-12);
  const auto pairs = generate_pairs(gen.ds);
  REQUIRE(fit.state.slacks.size() == pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& g = gen.ds.groups[pairs[p].group];
    const double m = score(fit.model, g.candidates[pairs[p].sample.u].features) -
                     score(fit.model, g.candidates[pairs[p].sample.v].features);
    CHECK(fit.state.slacks[p] == Approx(std::max(0.0, 1.0 - m)));
  }
}

TEST_CASE("iteration cap reports non-convergence") {
  const auto gen = linear_data(20, 5, 8);
  SvmOptions o;
  o.c = 3000;
  o.max_iters = 1;
  const auto fit = train_linear(gen.ds, o);
  CHECK_FALSE(fit.state.converged);
  CHECK_FALSE(fit.model.converged);
  CHECK(fit.state.iterations == 1);
}

TEST_CASE("standardized training keeps raw-space weights") {
  auto gen = linear_data(20, 3, 4);
  for (auto& g : gen.ds.groups)
    for (auto& c : g.candidates) {
      c.features[0] = 100.0 * c.features[0] + 7.0;
      c.features[2] *= 0.01;
    }
  SvmOptions o;
  o.standardize = true;
  const auto fit = train_linear(gen.ds, o);
  const auto st = Standardizer::fit(gen.ds);
  SvmOptions plain;
  const auto ref = train_linear(st.apply(gen.ds), plain);
  for (const auto& g : gen.ds.groups)
    for (const auto& c : g.candidates) {
      const double raw = score(fit.model, c.features);
      const double z = score(ref.model, st.apply(c.features));
      double shift = 0.0;
      for (std::size_t j = 0; j < 3; ++j) shift += fit.model.w[j] * st.mean[j];
      CHECK(raw - shift == Approx(z).epsilon(1e-9));
    }
}

TEST_CASE("linear kernel dual ranks like the primal solver") {
  const auto gen = linear_data(8, 4, 12);
  SvmOptions o;
  o.c = 10;
  o.tol = 1e-10;
  o.max_iters = 20000;
  const auto lin = train_linear(gen.ds, o);
  const auto ker = train_kernel(gen.ds, Kernel{KernelKind::linear, 1, 0}, o);
  const auto sl = score_all(lin.model, gen.ds);
  const auto sk = score_all(ker.model, gen.ds);
  for (std::size_t q = 0; q < sl.size(); ++q)
    for (std::size_t i = 0; i < sl[q].size(); ++i) CHECK(sk[q][i] == Approx(sl[q][i]).epsilon(1e-6).scale(1));
  CHECK(ker.model.objective == Approx(lin.model.objective).epsilon(1e-8));
}

TEST_CASE("xor data needs a nonlinear kernel") {
  synth::GenSpec spec;
  spec.queries = 30;
  spec.dim = 2;
  spec.scenario = synth::Scenario::xor_nonlinear;
  const auto gen = synth::generate(spec);
  const auto pairs = generate_pairs(gen.ds);

  // no direction in the plane does better than 0.6
  double best_linear = 0.0;
  for (int k = 0; k < 3600; ++k) {
    const double t = 2 * M_PI * k / 3600.0;
    LinearModel m;
    m.w = {std::cos(t), std::sin(t)};
    best_linear = std::max(best_linear, pairwise_accuracy(score_all(m, gen.ds), pairs));
  }
  CHECK(best_linear <= 0.6);

  SvmOptions o;
  o.c = 100;
  const auto lin = train_linear(gen.ds, o);
  CHECK(pairwise_accuracy(score_all(lin.model, gen.ds), pairs) <= 0.6);
  const auto rbf = train_kernel(gen.ds, Kernel::with_defaults(KernelKind::rbf, 2), o);
  CHECK(pairwise_accuracy(score_all(rbf.model, gen.ds), pairs) >= 0.95);
}

TEST_CASE("tiny c drives every score to zero") {
  const auto gen = linear_data(5, 3, 2);
  SvmOptions o;
  o.c = 1e-12;
  const auto fit = train_kernel(gen.ds, Kernel::with_defaults(KernelKind::rbf, 3), o);
  for (const auto& s : score_all(fit.model, gen.ds))
    for (double v : s) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("kernel score is the dual expansion") {
  const auto gen = linear_data(6, 3, 5);
  const Kernel k{KernelKind::rbf, 0.4, 0};
  const auto fit = train_kernel(gen.ds, k, SvmOptions{});
  REQUIRE_FALSE(fit.model.support.empty());
  const auto& x = fit.model.support.front().u;
  double ref = 0.0;
  for (const auto& sp : fit.model.support) {
    double ku = 0, kv = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      ku += (x[j] - sp.u[j]) * (x[j] - sp.u[j]);
      kv += (x[j] - sp.v[j]) * (x[j] - sp.v[j]);
    }
    ref += sp.alpha * (std::exp(-0.4 * ku) - std::exp(-0.4 * kv));
  }
  CHECK(score(fit.model, x) == Approx(ref).epsilon(1e-12));
  for (const auto& sp : fit.model.support) {
    CHECK(sp.alpha > 0.0);
    CHECK(sp.alpha <= 3.0 / static_cast<double>(generate_pairs(gen.ds).size()) * (1 + 1e-12));
  }
}

TEST_CASE("kernel objective trace is monotone") {
  const auto gen = linear_data(10, 4, 6);
  SvmOptions o;
  o.c = 50;
  for (auto kind : {KernelKind::rbf, KernelKind::sigmoid}) {
    const auto fit = train_kernel(gen.ds, Kernel::with_defaults(kind, 4), o);
    const auto& tr = fit.state.objective_trace;
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] <= tr[i - 1] * (1 + 1e-9));
  }
}

TEST_CASE("kernel cache budget is enforced") {
  const auto gen = linear_data(10, 4, 6);
  SvmOptions o;
  o.kernel_cache_entries = 50;
  CHECK_THROWS_AS(train_kernel(gen.ds, Kernel::with_defaults(KernelKind::rbf, 4), o), DataError);
}

TEST_CASE("model files round-trip") {
  const auto gen = linear_data(6, 3, 5);
  const auto lin = train_linear(gen.ds, SvmOptions{}).model;
  const auto lin2 = parse_linear_model(format_model(lin));
  CHECK(lin2.w == lin.w);
  CHECK(lin2.c == lin.c);
  CHECK(format_model(lin2) == format_model(lin));
  CHECK(format_model(lin).rfind("ranksvm linear c=3 dim=3\n", 0) == 0);

  const auto ker = train_kernel(gen.ds, Kernel{KernelKind::sigmoid, 0.3, -0.5}, SvmOptions{}).model;
  const auto ker2 = parse_kernel_model(format_model(ker));
  CHECK(ker2.kernel == ker.kernel);
  CHECK(ker2.support.size() == ker.support.size());
  CHECK(format_model(ker2) == format_model(ker));
  const auto& x = gen.ds.groups[0].candidates[0].features;
  CHECK(score(ker2, x) == score(ker, x));
  CHECK_THROWS_AS(parse_linear_model(format_model(ker)), DataError);
}

TEST_CASE("kkt spot check, scale covariance and reproducibility") {
  const auto gen = linear_data(20, 5, 31);
  SvmOptions o;
  o.c = 15;
  o.tol = 1e-8;
  const auto fit = train_linear(gen.ds, o);
  REQUIRE(fit.state.converged);
  const auto pairs = generate_pairs(gen.ds);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& g = gen.ds.groups[pairs[p].group];
    const double m = score(fit.model, g.candidates[pairs[p].sample.u].features) -
                     score(fit.model, g.candidates[pairs[p].sample.v].features);
    CHECK((m >= 1 - 1e-6 || fit.state.slacks[p] == Approx(1 - m)));
  }
  auto scaled = fit.model;
  for (auto& w : scaled.w) w *= 7.5;
  const auto a = evaluate_run(gen.ds, score_all(fit.model, gen.ds));
  const auto b = evaluate_run(gen.ds, score_all(scaled, gen.ds));
  for (const auto& [qid, m] : a.per_query) CHECK(b.per_query.at(qid).ap == m.ap);
  CHECK(format_model(train_linear(gen.ds, o).model) == format_model(fit.model));
  CHECK(format_model(train_kernel(gen.ds, Kernel::with_defaults(KernelKind::rbf, 5), o).model) ==
        format_model(train_kernel(gen.ds, Kernel::with_defaults(KernelKind::rbf, 5), o).model));
}
