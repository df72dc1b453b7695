#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "qrank/cli.hpp"
#include "qrank/dataset.hpp"
#include "qrank/metrics.hpp"
#include "qrank/model.hpp"
#include "qrank/textio.hpp"

using namespace qrank;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "qrank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir() {
  const char* env = std::getenv("QRANK_TEST_TMP");
  fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "qrank_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string p(const std::string& name) { return (workdir() / name).string(); }

std::string slurp(const std::string& path) { return textio::read_file(path); }

}  // namespace

TEST_CASE("gen, convert and split a 267-query file") {
  REQUIRE(run({"gen", "--out", p("flat.txt"), "--flat", "--dim", "8"}).code == 0);
  CHECK(slurp(p("flat.txt.truth")).find("scenario=linear-utility") != std::string::npos);
  REQUIRE(run({"convert", "--in", p("flat.txt"), "--out", p("train.dat"), "--group-size", "10"}).code == 0);
  CHECK(parse_ranking_file(p("train.dat")).groups.size() == 267);

  const auto r = run({"split", "--in", p("train.dat"), "--tail", "50"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("verb=split") != std::string::npos);
  CHECK(parse_ranking_file(p("train.dat.head")).groups.size() == 217);
  CHECK(parse_ranking_file(p("train.dat.tail")).groups.size() == 50);
}

TEST_CASE("train records kernel and c in the model header") {
  run({"gen", "--out", p("g.dat"), "--queries", "30", "--dim", "5"});
  const auto r = run({"train", "--in", p("g.dat"), "--ranker", "ranksvm", "--kernel", "linear", "--c", "15",
                      "--model", p("m.txt")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("c=15") != std::string::npos);
  CHECK(slurp(p("m.txt")).rfind("ranksvm linear c=15 dim=5\n", 0) == 0);

  run({"train", "--in", p("g.dat"), "--kernel", "rbf", "--c", "15", "--model", p("k.txt")});
  CHECK(slurp(p("k.txt")).rfind("ranksvm rbf c=15 dim=5 gamma=0.2 coef0=0\n", 0) == 0);
}

TEST_CASE("eval of a perfect run") {
  run({"gen", "--out", p("perfect.dat"), "--queries", "10", "--dim", "3"});
  const auto ds = parse_ranking_file(p("perfect.dat"));
  std::vector<std::vector<double>> scores;
  for (const auto& g : ds.groups) {
    std::vector<double> s;
    for (const auto& c : g.candidates) s.push_back(c.label);
    scores.push_back(s);
  }
  textio::write_file(p("perfect.run"), format_run(ds, scores));
  const auto r = run({"eval", "--in", p("perfect.dat"), "--run", p("perfect.run"), "--out", p("perfect.rep")});
  REQUIRE(r.code == 0);
  CHECK(slurp(p("perfect.rep")).rfind("MAP=1\nMRR=1\nP@1=1\n", 0) == 0);
}

TEST_CASE("predict then eval equals the library evaluation") {
  run({"gen", "--out", p("pe.dat"), "--queries", "30", "--dim", "5", "--noise", "0.1"});
  REQUIRE(run({"train", "--in", p("pe.dat"), "--ranker", "rankboost", "--iterations", "20", "--model",
               p("pe.model")}).code == 0);
  REQUIRE(run({"predict", "--model", p("pe.model"), "--in", p("pe.dat"), "--run", p("pe.run")}).code == 0);
  REQUIRE(run({"eval", "--in", p("pe.dat"), "--run", p("pe.run"), "--out", p("pe.rep")}).code == 0);
  const auto ds = parse_ranking_file(p("pe.dat"));
  const auto lib = evaluate_run(ds, score_dataset(load_model(p("pe.model")), ds));
  CHECK(slurp(p("pe.rep")) == format_report_kv(lib));
}

TEST_CASE("every ranker trains through the cli and reruns identically") {
  run({"gen", "--out", p("all.dat"), "--queries", "20", "--dim", "4"});
  for (const std::string ranker : {"ranksvm", "rankboost", "ranknet", "adarank", "rforest"}) {
    const std::vector<std::string> args{"train", "--in", p("all.dat"), "--ranker", ranker, "--desk-scale",
                                        "--epochs", "3", "--model", p(ranker + ".a")};
    REQUIRE(run(args).code == 0);
    auto again = args;
    again.back() = p(ranker + ".b");
    REQUIRE(run(again).code == 0);
    CHECK(slurp(p(ranker + ".a")) == slurp(p(ranker + ".b")));
  }
}

TEST_CASE("tune writes the trace csv") {
  run({"gen", "--out", p("tune.dat"), "--queries", "40", "--dim", "5"});
  const auto r = run({"tune", "--in", p("tune.dat"), "--tail", "10", "--phase", "fine", "--out", p("trace.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best c=") != std::string::npos);
  const auto csv = slurp(p("trace.csv"));
  CHECK(csv.rfind("c,map,mrr,p1,p5\n3,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("exit statuses") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"train", "--model", p("x")}).code == cli::kUsage);
  CHECK(run({"train", "--in", p("g.dat"), "--model", p("x"), "--ranker", "lambdamart"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"train", "--in", p("does-not-exist"), "--model", p("x")}).code == cli::kDataError);
  textio::write_file(p("bad.dat"), "1 qid:1 1:x\n");
  const auto bad = run({"train", "--in", p("bad.dat"), "--model", p("x")});
  CHECK(bad.code == cli::kDataError);
  CHECK(bad.err.find("line 1") != std::string::npos);

  run({"gen", "--out", p("nc.dat"), "--queries", "20", "--dim", "5", "--noise", "0.3"});
  const std::vector<std::string> capped{"train", "--in", p("nc.dat"), "--c", "30000", "--max-iters", "1",
                                        "--model", p("nc.model")};
  CHECK(run(capped).code == cli::kOk);
  auto strict = capped;
  strict.push_back("--fail-on-no-convergence");
  const auto r = run(strict);
  CHECK(r.code == cli::kNoConvergence);
  CHECK(fs::exists(p("nc.model")));
}
