#include "qrank/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qrank/dataset.hpp"
#include "qrank/error.hpp"
#include "qrank/metrics.hpp"
#include "qrank/model.hpp"
#include "qrank/protocol.hpp"
#include "qrank/rankers.hpp"
#include "qrank/synthgen.hpp"
#include "qrank/textio.hpp"
#include "qrank/tuning.hpp"

namespace qrank::cli {
namespace {

using textio::format_real;

struct ConvertArgs {
  std::string in, out;
  std::size_t group_size = 10;
};

struct SplitArgs {
  std::string in, out_head, out_tail;
  std::size_t tail = 50;
};

struct TrainArgs {
  std::string in, model;
  std::string ranker = "ranksvm";
  std::string kernel = "linear";
  std::optional<double> c, gamma, coef0, tol, learning_rate;
  std::optional<std::size_t> epochs, iterations, rounds, max_iters, hidden, bags, trees;
  std::optional<std::string> metric;
  std::uint64_t seed = 42;
  bool desk_scale = false;
  bool standardize = false;
  bool fail_on_no_convergence = false;
};

struct PredictArgs {
  std::string model, in, run;
};

struct EvalArgs {
  std::string in, run, out;
  int g_max = -1;
};

struct TuneArgs {
  std::string in, eval, out, report_dir;
  std::string phase = "fine";
  std::size_t tail = 50;
  std::vector<double> grid{3, 30, 300, 3000, 30000};
  double low = 5, high = 40, step = 5, initial_c = 3, c = 3;
  std::string metric = "map";
  std::uint64_t seed = 42;
  bool desk_scale = false;
  bool literal = false;
};

struct GenArgs {
  std::string out, truth;
  std::size_t queries = 267, group_size = 10, dim = 64;
  std::string scenario = "linear-utility";
  double noise = 0.0;
  std::uint64_t seed = 42;
  bool graded = false;
  bool flat = false;
};

void print_config(std::ostream& out, const std::string& verb, const std::string& body) {
  out << "# effective configuration\nverb=" << verb << '\n' << body << "# end configuration\n";
}

int do_convert(const ConvertArgs& a, std::ostream& out) {
  print_config(out, "convert", "in=" + a.in + "\nout=" + a.out + "\ngroup_size=" + std::to_string(a.group_size) + '\n');
  const auto records = parse_flat_file(a.in);
  const auto ds = attach_query_ids(records, a.group_size);
  write_ranking_file(ds, a.out);
  out << "wrote " << ds.groups.size() << " queries, " << ds.num_candidates() << " candidates to " << a.out << '\n';
  return kOk;
}

int do_split(SplitArgs a, std::ostream& out) {
  if (a.out_head.empty()) a.out_head = a.in + ".head";
  if (a.out_tail.empty()) a.out_tail = a.in + ".tail";
  print_config(out, "split",
               "in=" + a.in + "\ntail=" + std::to_string(a.tail) + "\nout_head=" + a.out_head +
                   "\nout_tail=" + a.out_tail + '\n');
  const auto ds = parse_ranking_file(a.in);
  const auto [head, tail] = split_tail(ds, a.tail);
  write_ranking_file(head, a.out_head);
  write_ranking_file(tail, a.out_tail);
  out << "head: " << head.groups.size() << " queries -> " << a.out_head << '\n';
  out << "tail: " << tail.groups.size() << " queries -> " << a.out_tail << '\n';
  return kOk;
}

int do_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  auto cfg = RankerConfig::defaults(parse_ranker(a.ranker), a.desk_scale, a.seed);
  cfg.kernel = ranksvm::parse_kernel(a.kernel);
  if (a.c) cfg.svm.c = *a.c;
  if (a.gamma) cfg.gamma = *a.gamma;
  if (a.coef0) cfg.coef0 = *a.coef0;
  if (a.tol) cfg.svm.tol = *a.tol;
  if (a.max_iters) cfg.svm.max_iters = *a.max_iters;
  cfg.svm.standardize = a.standardize;
  if (a.epochs) cfg.ranknet.epochs = *a.epochs;
  if (a.iterations) cfg.rankboost.iterations = *a.iterations;
  if (a.rounds) cfg.adarank.rounds = *a.rounds;
  if (a.hidden) cfg.ranknet.hidden = *a.hidden;
  if (a.bags) cfg.forest.bags = *a.bags;
  if (a.trees) cfg.forest.trees_per_bag = *a.trees;
  if (a.learning_rate) {
    cfg.ranknet.learning_rate = *a.learning_rate;
    cfg.forest.learning_rate = *a.learning_rate;
  }
  if (a.metric) {
    cfg.rankboost.metric = parse_metric(*a.metric);
    cfg.adarank.metric = parse_metric(*a.metric);
  }

  const auto ds = parse_ranking_file(a.in);
  print_config(out, "train", "in=" + a.in + "\nmodel=" + a.model + '\n' + cfg.describe(ds.dim));
  const auto outcome = train_ranker(ds, cfg);
  save_model(outcome.model, a.model);
  out << "wrote model to " << a.model << '\n';
  if (!outcome.converged) {
    err << "warning: optimizer stopped at the iteration limit before reaching the tolerance\n";
    if (a.fail_on_no_convergence) return kNoConvergence;
  }
  return kOk;
}

int do_predict(const PredictArgs& a, std::ostream& out) {
  print_config(out, "predict", "model=" + a.model + "\nin=" + a.in + "\nrun=" + a.run + '\n');
  const auto model = load_model(a.model);
  const auto ds = parse_ranking_file(a.in);
  const auto scores = score_dataset(model, ds);
  textio::write_file(a.run, format_run(ds, scores));
  out << "wrote run for " << ds.groups.size() << " queries to " << a.run << '\n';
  return kOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  print_config(out, "eval",
               "in=" + a.in + "\nrun=" + a.run + "\nout=" + a.out + "\ng_max=" + std::to_string(a.g_max) + '\n');
  const auto ds = parse_ranking_file(a.in);
  const auto scores = parse_run(textio::read_file(a.run), ds);
  const auto report = evaluate_run(ds, scores, a.g_max);
  out << format_report_table(report);
  if (!a.out.empty()) textio::write_file(a.out, format_report_kv(report));
  return kOk;
}

int do_tune(const TuneArgs& a, std::ostream& out) {
  tuning::TuningConfig tc;
  tc.coarse_grid = a.grid;
  tc.low = a.low;
  tc.high = a.high;
  tc.step = a.step;
  tc.initial_c = a.initial_c;
  tc.objective = parse_metric(a.metric);
  tc.literal = a.literal;
  tc.validate();

  std::string grid;
  for (double c : a.grid) grid += (grid.empty() ? "" : ",") + format_real(c);
  print_config(out, "tune",
               "in=" + a.in + "\neval=" + (a.eval.empty() ? "<tail split>" : a.eval) + "\ntail=" +
                   std::to_string(a.tail) + "\nphase=" + a.phase + "\nc=" + format_real(a.c) + "\ngrid=" + grid +
                   "\nlow=" + format_real(a.low) + "\nhigh=" + format_real(a.high) + "\nstep=" + format_real(a.step) +
                   "\ninitial_c=" + format_real(a.initial_c) + "\nmetric=" + metric_name(tc.objective) +
                   "\nliteral=" + (a.literal ? "1" : "0") + "\ndesk_scale=" + (a.desk_scale ? "1" : "0") +
                   "\nseed=" + std::to_string(a.seed) + "\nout=" + a.out + "\nreport_dir=" + a.report_dir + '\n');

  const auto all = parse_ranking_file(a.in);
  Dataset train, eval;
  if (a.eval.empty()) {
    std::tie(train, eval) = split_tail(all, a.tail);
  } else {
    train = all;
    eval = parse_ranking_file(a.eval);
  }
  const auto base = RankerConfig::defaults(RankerKind::ranksvm, a.desk_scale, a.seed);

  if (a.phase == "all") {
    protocol::ProtocolOptions po;
    po.desk_scale = a.desk_scale;
    po.seed = a.seed;
    po.comparison_c = a.c;
    po.tuning = tc;
    const auto result = protocol::run_protocol(train, eval, po);
    out << tuning::format_sweep_table(result.methods, "Ranker comparison") << '\n'
        << tuning::format_sweep_table(result.kernels, "RankSVM kernels") << '\n'
        << tuning::format_sweep_table(result.coarse, "RankSVM C range") << '\n';
    out << "best ranker=" << result.methods.best_row().setting << '\n';
    out << "best kernel=" << result.kernels.best_row().setting << '\n';
    out << "best coarse c=" << format_real(result.coarse.best_row().c) << '\n';
    out << "best c=" << format_real(result.fine.best_c) << '\n';
    if (!a.report_dir.empty()) {
      std::filesystem::create_directories(a.report_dir);
      protocol::write_reports(result, a.report_dir);
    }
    if (!a.out.empty()) textio::write_file(a.out, tuning::format_trace_csv(result.fine.trace));
    return kOk;
  }
  if (a.phase == "methods") {
    tuning::SweepResult r;
    r.objective = tc.objective;
    for (auto kind : {RankerKind::ranksvm, RankerKind::rankboost, RankerKind::ranknet, RankerKind::adarank,
                      RankerKind::rforest}) {
      auto cfg = RankerConfig::defaults(kind, a.desk_scale, a.seed);
      cfg.svm.c = a.c;
      tuning::SweepRow row;
      row.setting = ranker_name(kind);
      row.metrics = tuning::train_and_evaluate(train, eval, cfg);
      r.rows.push_back(row);
    }
    r.best = tuning::argmax_row(r.rows, r.objective);
    out << tuning::format_sweep_table(r, "Ranker comparison");
    out << "best ranker=" << r.best_row().setting << '\n';
    if (!a.out.empty()) textio::write_file(a.out, tuning::format_trace_csv(r.rows));
    return kOk;
  }
  if (a.phase == "kernel") {
    const auto r = tuning::kernel_sweep(train, eval, tc.kernels, a.c, base, tc.objective);
    out << tuning::format_sweep_table(r, "RankSVM kernels");
    out << "best kernel=" << r.best_row().setting << '\n';
    if (!a.out.empty()) textio::write_file(a.out, tuning::format_trace_csv(r.rows));
    return kOk;
  }
  if (a.phase == "coarse") {
    const auto r = tuning::coarse_c_scan(train, eval, tc.coarse_grid, base.svm, tc.objective);
    out << tuning::format_sweep_table(r, "RankSVM C range");
    out << "best c=" << format_real(r.best_row().c) << '\n';
    if (!a.out.empty()) textio::write_file(a.out, tuning::format_trace_csv(r.rows));
    return kOk;
  }
  if (a.phase == "fine") {
    const auto r = tuning::fine_c_search(train, eval, tc, base.svm);
    out << tuning::format_trace_csv(r.trace);
    out << "best c=" << format_real(r.best_c) << '\n';
    if (!a.out.empty()) textio::write_file(a.out, tuning::format_trace_csv(r.trace));
    return kOk;
  }
  throw ConfigError("unknown phase '" + a.phase + "'");
}

int do_gen(GenArgs a, std::ostream& out) {
  if (a.truth.empty()) a.truth = a.out + ".truth";
  synth::GenSpec spec;
  spec.queries = a.queries;
  spec.group_size = a.group_size;
  spec.dim = a.dim;
  spec.scenario = synth::parse_scenario(a.scenario);
  spec.noise_rate = a.noise;
  spec.seed = a.seed;
  spec.graded = a.graded;
  const std::string body = "out=" + a.out + "\ntruth=" + a.truth + "\nqueries=" + std::to_string(a.queries) +
                           "\ngroup_size=" + std::to_string(a.group_size) + "\ndim=" + std::to_string(a.dim) +
                           "\nscenario=" + a.scenario + "\nnoise=" + format_real(a.noise) + "\ngraded=" +
                           (a.graded ? "1" : "0") + "\nflat=" + (a.flat ? "1" : "0") + "\nseed=" +
                           std::to_string(a.seed) + '\n';
  print_config(out, "gen", body);
  const auto gen = synth::generate(spec);
  if (a.flat) {
    textio::write_file(a.out, format_flat_text(flatten(gen.ds)));
  } else {
    write_ranking_file(gen.ds, a.out);
  }
  textio::write_file(a.truth, "seed=" + std::to_string(a.seed) + '\n' + gen.truth.format());
  out << "wrote " << gen.ds.groups.size() << " queries to " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-to-rank toolkit for question re-ranking"};
  app.require_subcommand(1);

  ConvertArgs convert;
  auto* c_convert = app.add_subcommand("convert", "Group a flat (qid-less) file into queries");
  c_convert->add_option("--in", convert.in, "Flat input file")->required();
  c_convert->add_option("--out", convert.out, "Query-grouped output file")->required();
  c_convert->add_option("--group-size", convert.group_size, "Candidates per query")->check(CLI::PositiveNumber);

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Split off the trailing queries");
  c_split->add_option("--in", split.in)->required();
  c_split->add_option("--tail", split.tail, "Number of trailing queries")->check(CLI::PositiveNumber);
  c_split->add_option("--out-head", split.out_head, "Default: <in>.head");
  c_split->add_option("--out-tail", split.out_tail, "Default: <in>.tail");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a ranker");
  c_train->add_option("--in", train.in)->required();
  c_train->add_option("--model,--out", train.model, "Model output file")->required();
  c_train->add_option("--ranker", train.ranker)
      ->check(CLI::IsMember({"ranksvm", "rankboost", "ranknet", "adarank", "rforest"}));
  c_train->add_option("--kernel", train.kernel)->check(CLI::IsMember({"linear", "rbf", "sigmoid"}));
  c_train->add_option("--c", train.c, "RankSVM trade-off parameter");
  c_train->add_option("--gamma", train.gamma, "rbf/sigmoid scale (default 1/dim)");
  c_train->add_option("--coef0", train.coef0, "sigmoid offset");
  c_train->add_option("--tol", train.tol);
  c_train->add_option("--max-iters", train.max_iters);
  c_train->add_option("--epochs", train.epochs, "RankNet epochs");
  c_train->add_option("--iterations", train.iterations, "RankBoost rounds");
  c_train->add_option("--rounds", train.rounds, "AdaRank rounds");
  c_train->add_option("--hidden", train.hidden, "RankNet hidden units");
  c_train->add_option("--bags", train.bags, "Forest bags");
  c_train->add_option("--trees", train.trees, "Trees per forest bag");
  c_train->add_option("--learning-rate", train.learning_rate, "RankNet / forest learning rate");
  c_train->add_option("--metric", train.metric, "Boosting metric: map|mrr|p@1|p@5|err@10|avgrec");
  c_train->add_option("--seed", train.seed);
  c_train->add_flag("--desk-scale", train.desk_scale, "Small forest/boosting budgets");
  c_train->add_flag("--standardize", train.standardize, "Standardize features (linear RankSVM)");
  c_train->add_flag("--fail-on-no-convergence", train.fail_on_no_convergence, "Exit 3 if the optimizer hits max iters");

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "Score a dataset and write a run file");
  c_predict->add_option("--model", predict.model)->required();
  c_predict->add_option("--in", predict.in)->required();
  c_predict->add_option("--run,--out", predict.run)->required();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a run file");
  c_eval->add_option("--in", eval.in)->required();
  c_eval->add_option("--run", eval.run)->required();
  c_eval->add_option("--out", eval.out, "Key-value report file");
  c_eval->add_option("--g-max", eval.g_max, "ERR maximum grade (default: max label)");

  TuneArgs tune;
  auto* c_tune = app.add_subcommand("tune", "Kernel sweep, C range scan and fine C search");
  c_tune->add_option("--in", tune.in, "Training data")->required();
  c_tune->add_option("--eval", tune.eval, "Evaluation data (default: tail split of --in)");
  c_tune->add_option("--tail", tune.tail)->check(CLI::PositiveNumber);
  c_tune->add_option("--phase", tune.phase)->check(CLI::IsMember({"methods", "kernel", "coarse", "fine", "all"}));
  c_tune->add_option("--c", tune.c, "C for the method and kernel comparisons");
  c_tune->add_option("--grid", tune.grid, "Coarse C grid")->delimiter(',');
  c_tune->add_option("--low", tune.low);
  c_tune->add_option("--high", tune.high);
  c_tune->add_option("--step", tune.step);
  c_tune->add_option("--initial-c", tune.initial_c);
  c_tune->add_option("--metric", tune.metric);
  c_tune->add_option("--seed", tune.seed);
  c_tune->add_option("--out", tune.out, "Trace CSV");
  c_tune->add_option("--report-dir", tune.report_dir, "Directory for the phase=all reports");
  c_tune->add_flag("--desk-scale", tune.desk_scale);
  c_tune->add_flag("--literal", tune.literal, "Never raise the reference MAP during the fine search");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--truth", gen.truth, "Ground-truth sidecar (default: <out>.truth)");
  c_gen->add_option("--queries", gen.queries)->check(CLI::PositiveNumber);
  c_gen->add_option("--group-size", gen.group_size)->check(CLI::PositiveNumber);
  c_gen->add_option("--dim", gen.dim)->check(CLI::PositiveNumber);
  c_gen->add_option("--scenario", gen.scenario)
      ->check(CLI::IsMember({"linear-utility", "xor-nonlinear", "single-feature", "noise"}));
  c_gen->add_option("--noise", gen.noise);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_flag("--graded", gen.graded);
  c_gen->add_flag("--flat", gen.flat, "Write the flat (qid-less) format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (*c_convert) return do_convert(convert, out);
    if (*c_split) return do_split(split, out);
    if (*c_train) return do_train(train, out, err);
    if (*c_predict) return do_predict(predict, out);
    if (*c_eval) return do_eval(eval, out);
    if (*c_tune) return do_tune(tune, out);
    if (*c_gen) return do_gen(gen, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace qrank::cli
