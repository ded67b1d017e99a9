// Command-line front end: inspect, train, probe, transfer, report.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "same/checkpoint.hpp"
#include "same/config.hpp"
#include "same/errors.hpp"
#include "same/evaluation.hpp"
#include "same/report.hpp"
#include "same/synthetic.hpp"
#include "same/training.hpp"
#include "same/tudataset.hpp"

namespace fs = std::filesystem;
using namespace same;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kFormat = 3, kNumeric = 4, kIntegrity = 5 };

constexpr const char* kDataRootEnv = "SAME_DATA_ROOT";

GraphDataset load_dataset(const std::string& spec, FeatureSource features) {
  if (spec == "synthetic" || spec.rfind("synthetic:", 0) == 0) {
    SyntheticConfig sc;
    if (spec.size() > 10) {
      try {
        sc.num_graphs = std::stoi(spec.substr(10));
      } catch (const std::exception&) {
        throw ArgumentError("bad synthetic dataset spec '" + spec + "'");
      }
    }
    return make_planted_dataset(sc);
  }
  fs::path dir = spec;
  if (!fs::is_directory(dir)) {
    const char* root = std::getenv(kDataRootEnv);
    if (root && fs::is_directory(fs::path(root) / spec)) {
      dir = fs::path(root) / spec;
    } else {
      throw FormatError("dataset '" + spec + "' not found (not a directory" +
                        (root ? std::string(", nor under ") + root : std::string("; ") +
                                                                         kDataRootEnv + " unset") +
                        ")");
    }
  }
  fs::path clean = dir.lexically_normal();
  std::string name = clean.filename().string();
  if (name.empty()) name = clean.parent_path().filename().string();
  if (!fs::exists(dir / (name + "_A.txt"))) {
    // Fall back to the prefix of the only NAME_A.txt in the directory.
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string file = e.path().filename().string();
      if (file.size() > 6 && file.ends_with("_A.txt")) found.push_back(file.substr(0, file.size() - 6));
    }
    if (found.size() == 1) name = found.front();
  }
  return parse_tudataset(dir, name, features);
}

// Flags that map onto config settings.
struct FlagSpec {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
};

constexpr FlagSpec kTrainFlags[] = {
    {"--dataset", "data", "dataset", "Dataset directory, name under $SAME_DATA_ROOT, or synthetic[:N]"},
    {"--features", "data", "features", "attributes | attributes+labels"},
    {"--folds", "data", "folds", "Number of cross-validation folds"},
    {"--fold-ids", "data", "fold_ids", "Comma-separated folds to run (default: all)"},
    {"--strategy", "train", "strategy", "classical-st|classical-mt|trad-meta|finetune|isame|esame"},
    {"--tasks", "train", "tasks", "Trained tasks, e.g. gc,nc,lp"},
    {"--seed", "train", "seed", "Random seed"},
    {"--inner-lr", "train", "inner_lr", "Inner-loop learning rate"},
    {"--outer-lr", "train", "outer_lr", "Adam learning rate"},
    {"--inner-steps", "train", "inner_steps", "Inner-loop gradient steps"},
    {"--epochs", "train", "epochs", "Maximum epochs"},
    {"--batch-size", "train", "batch_size", "Graphs per batch / episode"},
    {"--meta-grad", "train", "meta_grad", "fo | so"},
    {"--patience", "train", "patience", "Early-stopping patience (evaluations)"},
    {"--eval-every", "train", "eval_every", "Epochs between validation evaluations"},
    {"--hidden", "train", "hidden", "Embedding width"},
    {"--method", "eval", "method", "auto | heads | linear | mlp"},
    {"--eval-tasks", "eval", "tasks", "Tasks to score (default: the trained tasks)"},
    {"--out", "run", "out", "Output directory"},
    {"--workers", "run", "workers", "Parallel fold workers (0 = all cores)"},
};

struct Options {
  std::string config_file;
  std::map<std::string, std::string> values;  // flag -> value
};

void add_config_flags(CLI::App* cmd, Options& opts, std::initializer_list<const char*> only) {
  cmd->add_option("--config", opts.config_file, "Config file (key = value sections)");
  for (const FlagSpec& f : kTrainFlags) {
    if (only.size() && std::find_if(only.begin(), only.end(), [&](const char* o) {
                         return std::string(o) == f.flag;
                       }) == only.end())
      continue;
    cmd->add_option(f.flag, opts.values[f.flag], f.help);
  }
}

RunConfig build_config(const CLI::App* cmd, const Options& opts) {
  RunConfig cfg;
  if (!opts.config_file.empty()) cfg = load_config(opts.config_file);
  for (const FlagSpec& f : kTrainFlags) {
    auto it = opts.values.find(f.flag);
    if (it == opts.values.end() || cmd->count(f.flag) == 0) continue;
    apply_setting(cfg, f.section, f.key, it->second);
  }
  return cfg;
}

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(n, static_cast<int>(jobs)));
}

/// Runs job(i) for i in [0, n) on a small thread pool; rethrows the first
/// failure in index order.
template <class Job>
void parallel_for(std::size_t n, int workers, Job job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < worker_count(workers, n); ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::mutex g_print;

void say(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_print);
  std::cout << line << std::endl;
}

TrainConfig fold_train_config(const RunConfig& cfg, int fold) {
  TrainConfig t = cfg.train;
  t.seed = cfg.train.seed + static_cast<std::uint64_t>(fold);
  return t;
}

Provenance provenance_for(const RunConfig& cfg, const std::string& dataset_name, int fold) {
  return {dataset_name, std::string(to_string(cfg.train.strategy)), cfg.train.tasks.label(), fold,
          cfg.train.seed, config_hash(cfg)};
}

EvalOptions eval_options(const RunConfig& cfg, int fold) {
  EvalOptions e = cfg.eval;
  e.seed = cfg.eval.seed + static_cast<std::uint64_t>(fold);
  return e;
}

void write_snapshot(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  std::ofstream(cfg.out / "config.ini") << "# config_hash=" << config_hash(cfg)
                                        << " seed=" << cfg.train.seed << "\n"
                                        << config_snapshot(cfg);
}

void write_metrics(const fs::path& dir, const std::vector<MetricRow>& rows, const RunConfig& cfg) {
  write_metrics_csv(dir / "metrics.csv", rows);
  write_metrics_json(dir / "metrics.json", rows, config_snapshot(cfg));
}

std::string fold_dir(int fold) { return "fold" + std::to_string(fold); }

// inspect ------------------------------------------------------------------

int cmd_inspect(const std::string& spec, const std::string& features) {
  RunConfig cfg;
  if (!features.empty()) apply_setting(cfg, "data", "features", features);
  const GraphDataset ds = load_dataset(spec, cfg.features);
  std::size_t nodes = 0, edges = 0;
  for (const Graph& g : ds.graphs) nodes += static_cast<std::size_t>(g.num_nodes), edges += g.edges.size();
  const double n = static_cast<double>(std::max<std::size_t>(1, ds.size()));
  std::printf("%s: %zu graphs, %d graph classes, %d node classes, feature dim %d\n",
              ds.name.c_str(), ds.size(), ds.num_graph_classes, ds.num_node_classes,
              ds.feature_dim);
  std::printf("nodes %zu (avg %.2f), edges %zu (avg %.2f)\n", nodes, nodes / n, edges, edges / n);
  return kOk;
}

// train --------------------------------------------------------------------

int cmd_train(const RunConfig& cfg, bool evaluate, bool quiet) {
  cfg.validate();
  const GraphDataset ds = load_dataset(cfg.dataset, cfg.features);
  const auto folds = make_folds(ds, cfg.folds, cfg.train.seed, cfg.stratify);
  const auto ids = selected_folds(cfg);
  const TaskSet eval_tasks = cfg.eval_tasks.empty() ? cfg.train.tasks : cfg.eval_tasks;
  write_snapshot(cfg);
  std::vector<std::vector<MetricRow>> per_fold(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const int f = ids[i];
    const FoldSplit& fold = folds.at(static_cast<std::size_t>(f));
    const TrainConfig tc = fold_train_config(cfg, f);
    const fs::path dir = cfg.out / fold_dir(f);
    fs::create_directories(dir);
    EpochCallback progress;
    if (!quiet)
      progress = [&](const CurveRow& row) {
        if (row.val_metric)
          say("fold " + std::to_string(f) + " " + row.phase + " epoch " +
              std::to_string(row.epoch) + " val " + std::to_string(*row.val_metric));
      };
    TrainResult result = train(ds, fold, tc, progress);
    Checkpoint cp{result.params, {}};
    cp.meta = {{"dataset", cfg.dataset},
               {"dataset_name", ds.name},
               {"features", cfg.features == FeatureSource::kAttributes ? "attributes"
                                                                      : "attributes+labels"},
               {"folds", std::to_string(cfg.folds)},
               {"stratify", cfg.stratify ? "true" : "false"},
               {"split_seed", std::to_string(cfg.train.seed)},
               {"fold", std::to_string(f)},
               {"strategy", std::string(to_string(cfg.train.strategy))},
               {"tasks", cfg.train.tasks.label()},
               {"seed", std::to_string(cfg.train.seed)},
               {"config_hash", config_hash(cfg)},
               {"best_epoch", std::to_string(result.best_epoch)}};
    save_checkpoint(dir / "model.ckpt", cp);
    write_curve_csv(dir / "curve.csv", result.curve, config_hash(cfg), cfg.train.seed);
    {
      std::ofstream log(dir / "train.log");
      for (const auto& line : result.log) log << line << "\n";
    }
    say("fold " + std::to_string(f) + ": best epoch " + std::to_string(result.best_epoch) +
        ", val " + std::to_string(result.best_val) + ", " + std::to_string(result.updates) +
        " updates");
    if (evaluate)
      per_fold[i] = evaluate_fold(result.params, ds, fold, cfg.train.strategy, cfg.train.tasks,
                                  eval_tasks, eval_options(cfg, f),
                                  provenance_for(cfg, ds.name, f));
  });
  if (evaluate) {
    std::vector<MetricRow> rows;
    for (auto& p : per_fold) rows.insert(rows.end(), p.begin(), p.end());
    write_metrics(cfg.out, rows, cfg);
    std::cout << render_tables(rows);
  }
  return kOk;
}

// probe --------------------------------------------------------------------

std::vector<fs::path> checkpoint_files(const fs::path& where) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(where)) return {where};
  if (!fs::is_directory(where)) throw FormatError("no checkpoint at " + where.string());
  for (const auto& e : fs::recursive_directory_iterator(where))
    if (e.is_regular_file() && e.path().extension() == ".ckpt") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw FormatError("no .ckpt files under " + where.string());
  return out;
}

const std::string& meta(const Checkpoint& cp, const std::string& key) {
  auto it = cp.meta.find(key);
  if (it == cp.meta.end()) throw IntegrityError("checkpoint lacks meta '" + key + "'");
  return it->second;
}

int cmd_probe(const fs::path& where, const RunConfig& overrides, bool tasks_given) {
  std::vector<MetricRow> rows;
  std::map<std::string, GraphDataset> datasets;
  for (const fs::path& file : checkpoint_files(where)) {
    const Checkpoint cp = load_checkpoint(file);
    RunConfig cfg = overrides;
    cfg.dataset = meta(cp, "dataset");
    apply_setting(cfg, "data", "features", meta(cp, "features"));
    apply_setting(cfg, "data", "folds", meta(cp, "folds"));
    apply_setting(cfg, "data", "stratify", meta(cp, "stratify"));
    apply_setting(cfg, "train", "strategy", meta(cp, "strategy"));
    apply_setting(cfg, "train", "tasks", meta(cp, "tasks"));
    apply_setting(cfg, "train", "seed", meta(cp, "seed"));
    const int f = std::stoi(meta(cp, "fold"));
    const std::string key = cfg.dataset + "|" + meta(cp, "features");
    if (!datasets.count(key)) datasets.emplace(key, load_dataset(cfg.dataset, cfg.features));
    const GraphDataset& ds = datasets.at(key);
    const auto folds = make_folds(ds, cfg.folds, std::stoull(meta(cp, "split_seed")), cfg.stratify);
    const TaskSet eval_tasks = tasks_given ? overrides.eval_tasks : cfg.train.tasks;
    const auto strategy = *parse_strategy(meta(cp, "strategy"));
    Provenance prov{meta(cp, "dataset_name"), meta(cp, "strategy"), meta(cp, "tasks"), f,
                    cfg.train.seed, meta(cp, "config_hash")};
    auto part = evaluate_fold(cp.model, ds, folds.at(static_cast<std::size_t>(f)), strategy,
                              cfg.train.tasks, eval_tasks, eval_options(cfg, f), prov);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_metrics(overrides.out, rows, overrides);
  std::cout << render_tables(rows);
  return kOk;
}

// transfer -----------------------------------------------------------------

int cmd_transfer(const RunConfig& cfg, const std::string& target_name, const std::string& probe) {
  cfg.validate();
  const auto target = parse_task(target_name);
  if (!target) throw ArgumentError("unknown target task '" + target_name + "'");
  const auto method = parse_eval_method(probe);
  if (!method || (*method != EvalMethod::kLinear && *method != EvalMethod::kMlp))
    throw ArgumentError("--probe must be linear or mlp");
  const GraphDataset ds = load_dataset(cfg.dataset, cfg.features);
  const auto folds = make_folds(ds, cfg.folds, cfg.train.seed, cfg.stratify);
  const auto ids = selected_folds(cfg);
  write_snapshot(cfg);
  std::vector<std::vector<MetricRow>> per_fold(ids.size());
  parallel_for(ids.size(), cfg.workers, [&](std::size_t i) {
    const int f = ids[i];
    TransferSpec spec{fold_train_config(cfg, f), *target, *method};
    auto outcome = transfer_experiment(ds, folds.at(static_cast<std::size_t>(f)), spec,
                                       eval_options(cfg, f), provenance_for(cfg, ds.name, f));
    write_curve_csv(cfg.out / fold_dir(f) / "curve.csv", outcome.training.curve, config_hash(cfg),
                    cfg.train.seed);
    say("fold " + std::to_string(f) + ": source " + cfg.train.tasks.label() + " -> " +
        target_name + " done");
    per_fold[i] = std::move(outcome.rows);
  });
  std::vector<MetricRow> rows;
  for (auto& p : per_fold) rows.insert(rows.end(), p.begin(), p.end());
  write_metrics(cfg.out, rows, cfg);
  std::cout << render_tables(rows);
  return kOk;
}

// report -------------------------------------------------------------------

int cmd_report(const fs::path& results, const fs::path& out) {
  const auto rows = collect_metrics(results);
  if (rows.empty()) throw FormatError("no metric rows under " + results.string());
  write_report(out, rows);
  std::cout << render_tables(rows);
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-task graph embeddings via episodic meta-learning"};
  app.require_subcommand(1);

  std::string inspect_dataset, inspect_features;
  auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  inspect->add_option("--dataset", inspect_dataset, "Dataset directory or name")->required();
  inspect->add_option("--features", inspect_features, "attributes | attributes+labels");

  Options train_opts;
  bool train_eval = false, quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train on folds; writes checkpoints and curves");
  add_config_flags(train_cmd, train_opts, {});
  train_cmd->add_flag("--evaluate", train_eval, "Score the test folds right after training");
  train_cmd->add_flag("--quiet", quiet, "Only print per-fold summaries");

  Options probe_opts;
  std::string checkpoint;
  auto* probe_cmd = app.add_subcommand("probe", "Score checkpoints on their test folds");
  probe_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file or training output directory")
      ->required();
  add_config_flags(probe_cmd, probe_opts, {"--method", "--eval-tasks", "--out"});
  probe_cmd->add_option("--tasks", probe_opts.values["--eval-tasks"], "Tasks to score");

  Options transfer_opts;
  std::string target, probe_kind = "linear";
  auto* transfer_cmd =
      app.add_subcommand("transfer", "Train on source tasks, probe an unseen target task");
  add_config_flags(transfer_cmd, transfer_opts, {});
  transfer_cmd->add_option("--target", target, "Target task gc|nc|lp")->required();
  transfer_cmd->add_option("--probe", probe_kind, "linear | mlp");

  std::string results_dir, report_out;
  auto* report_cmd = app.add_subcommand("report", "Aggregate metrics.csv files into tables");
  report_cmd->add_option("--results", results_dir, "Directory searched for metrics.csv")->required();
  report_cmd->add_option("--out", report_out, "Output directory (default: the results directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (inspect->parsed()) return cmd_inspect(inspect_dataset, inspect_features);
  if (train_cmd->parsed())
    return cmd_train(build_config(train_cmd, train_opts), train_eval, quiet);
  if (probe_cmd->parsed()) {
    RunConfig cfg = build_config(probe_cmd, probe_opts);
    const bool tasks_given = probe_cmd->count("--tasks") || probe_cmd->count("--eval-tasks");
    if (probe_cmd->count("--tasks"))
      apply_setting(cfg, "eval", "tasks", probe_opts.values["--eval-tasks"]);
    return cmd_probe(checkpoint, cfg, tasks_given);
  }
  if (transfer_cmd->parsed())
    return cmd_transfer(build_config(transfer_cmd, transfer_opts), target, probe_kind);
  if (report_cmd->parsed())
    return cmd_report(results_dir, report_out.empty() ? results_dir : report_out);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kIntegrity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
