#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "qrank/error.hpp"
#include "qrank/synthgen.hpp"
#include "qrank/tuning.hpp"

using namespace qrank;
using namespace qrank::tuning;
using ranksvm::KernelKind;

namespace {

Evaluator curve(std::function<double(double)> f) {
  return [f](double c) {
    MetricValues m;
    m.ap = f(c);
    return m;
  };
}

std::pair<Dataset, Dataset> linear_split() {
  synth::GenSpec spec;
  spec.queries = 40;
  spec.dim = 5;
  return split_tail(synth::generate(spec).ds, 10);
}

}  // namespace

TEST_CASE("fine grid") {
  TuningConfig cfg;
  CHECK(cfg.fine_grid() == std::vector<double>{3, 5, 10, 15, 20, 25, 30, 35, 40});
  cfg.initial_c = 10;
  CHECK(cfg.fine_grid() == std::vector<double>{5, 10, 15, 20, 25, 30, 35, 40});
  cfg.step = 0;
  CHECK_THROWS_AS(cfg.fine_grid(), ConfigError);
}

TEST_CASE("fine search on a curve peaked at 15") {
  const auto r = fine_c_search(TuningConfig{}, curve([](double c) { return 0.7 - 0.001 * std::abs(c - 15); }));
  CHECK(r.best_c == 15);
  REQUIRE(r.trace.size() == 9);
  CHECK(r.trace.front().c == 3);
  CHECK(r.trace.back().c == 40);
}

TEST_CASE("fine search on a decreasing curve keeps the initial C") {
  const auto r = fine_c_search(TuningConfig{}, curve([](double c) { return 1.0 / c; }));
  CHECK(r.best_c == 3);
}

TEST_CASE("fine search returns the grid argmax of random curves") {
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  TuningConfig cfg;
  const auto grid = cfg.fine_grid();
  for (int rep = 0; rep < 100; ++rep) {
    std::map<double, double> values;
    for (double c : grid) values[c] = ud(gen);
    double best_c = grid[0];
    for (double c : grid)
      if (values[c] > values[best_c]) best_c = c;
    CHECK(fine_c_search(cfg, curve([&](double c) { return values.at(c); })).best_c == best_c);
  }
}

TEST_CASE("literal mode compares against the initial value only") {
  TuningConfig cfg;
  cfg.literal = true;
  // 5 beats the initial value, 10 beats 5, 20 beats the initial value but not 10
  std::map<double, double> v{{3, 0.5}, {5, 0.6}, {10, 0.9}, {15, 0.4}, {20, 0.55},
                             {25, 0.1}, {30, 0.1}, {35, 0.1}, {40, 0.1}};
  const auto ev = curve([&](double c) { return v.at(c); });
  CHECK(fine_c_search(cfg, ev).best_c == 20);
  cfg.literal = false;
  CHECK(fine_c_search(cfg, ev).best_c == 10);
}

TEST_CASE("scan grid") {
  const std::vector<double> one{30};
  CHECK(scan_grid(one, curve([](double) { return 0.2; })).best_row().c == 30);

  const std::vector<double> grid{3, 30, 300, 3000, 30000};
  const auto r = scan_grid(grid, curve([](double c) { return -std::abs(std::log10(c) - 2.5); }));
  CHECK(r.best_row().c == 300);

  const auto failing = scan_grid(grid, [](double c) -> MetricValues {
    if (c > 100) throw DataError("boom");
    MetricValues m;
    m.ap = 1 / c;
    return m;
  });
  CHECK(failing.rows[2].failed);
  CHECK(failing.rows[2].error == "boom");
  CHECK(failing.best_row().c == 3);
}

TEST_CASE("argmax keeps the earliest of tied rows") {
  std::vector<SweepRow> rows(3);
  rows[0].metrics.ap = 0.5;
  rows[1].metrics.ap = 0.7;
  rows[2].metrics.ap = 0.7;
  CHECK(argmax_row(rows, MetricId::map) == 1);
  rows[1].failed = true;
  CHECK(argmax_row(rows, MetricId::map) == 2);
}

TEST_CASE("trace csv") {
  std::vector<SweepRow> rows(2);
  rows[0].c = 5;
  rows[0].metrics = {0.75, 0.5, 1, 0.4, 0, 0};
  rows[1].c = 10;
  rows[1].failed = true;
  CHECK(format_trace_csv(rows) == "c,map,mrr,p1,p5\n5,0.75,0.5,1,0.4\n10,nan,nan,nan,nan\n");
}

TEST_CASE("kernel sweep") {
  const auto [train, eval] = linear_split();
  const auto base = RankerConfig::defaults(RankerKind::ranksvm);
  const std::vector<KernelKind> only_rbf{KernelKind::rbf};
  CHECK(kernel_sweep(train, eval, only_rbf, 3, base).best_row().setting == "rbf");

  const std::vector<KernelKind> all{KernelKind::linear, KernelKind::rbf, KernelKind::sigmoid};
  const auto r = kernel_sweep(train, eval, all, 3, base);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].metrics.ap >= r.rows[2].metrics.ap);

  auto tiny = base;
  tiny.svm.kernel_cache_entries = 10;
  try {
    kernel_sweep(train, eval, only_rbf, 3, tiny);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("kernel rbf:", 0) == 0);
  }
}

TEST_CASE("fine search on real training runs is deterministic") {
  const auto [train, eval] = linear_split();
  TuningConfig cfg;
  cfg.high = 15;
  const auto a = fine_c_search(train, eval, cfg, ranksvm::SvmOptions{});
  const auto b = fine_c_search(train, eval, cfg, ranksvm::SvmOptions{});
  CHECK(format_trace_csv(a.trace) == format_trace_csv(b.trace));
  CHECK(a.best_c == b.best_c);
}
