#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "same/errors.hpp"
#include "same/evaluation.hpp"
#include "same/metrics.hpp"
#include "same/report.hpp"
#include "same/synthetic.hpp"
#include "same/tudataset.hpp"
#include "test_support.hpp"

using namespace same;

namespace {

double brute_force_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

std::vector<const Graph*> pointers(const GraphDataset& ds, const std::vector<int>& ids) {
  std::vector<const Graph*> out;
  for (int id : ids) out.push_back(&ds.graphs[static_cast<std::size_t>(id)]);
  return out;
}

TrainConfig tiny_train(StrategyKind kind, TaskSet tasks) {
  TrainConfig c;
  c.strategy = kind;
  c.tasks = tasks;
  c.hidden = 16;
  c.layers = 2;
  c.epochs = 4;
  c.batch_size = 8;
  c.early_stop.eval_every = 2;
  return c;
}

MetricRow row(std::string strategy, std::string trained, std::string task, int fold, double v) {
  MetricRow r;
  r.experiment = trained.find('+') == std::string::npos ? "Q1" : "Q2";
  r.dataset = "D";
  r.strategy = std::move(strategy);
  r.trained_tasks = std::move(trained);
  r.eval_task = std::move(task);
  r.method = "linear";
  r.fold = fold;
  r.metric = "accuracy";
  r.value = v;
  r.config_hash = "abc";
  return r;
}

}  // namespace

TEST_CASE("auc: worked example, separation and anti-separation") {
  const std::vector<double> s{0.9, 0.4, 0.5, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  CHECK(roc_auc(s, y) == 0.75);
  CHECK(roc_auc(std::vector<double>{3, 4, 1, 2}, y) == 1.0);
  CHECK(roc_auc(std::vector<double>{1, 2, 3, 4}, y) == 0.0);
  CHECK(roc_auc(std::vector<double>{1, 1, 1, 1}, y) == 0.5);
  CHECK_THROWS_AS(roc_auc(s, std::vector<int>{1, 1, 1, 1}), ArgumentError);
}

TEST_CASE("auc equals brute-force pair counting, ties included") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 100)(rng);
    std::uniform_int_distribution<int> level(0, trial % 2 ? 5 : 1000000);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = level(rng) / 7.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(roc_auc(s, y) == brute_force_auc(s, y));
  }
}

TEST_CASE("delta_m examples") {
  CHECK(delta_m(std::vector<double>{48.3, 85.3}, std::vector<double>{51.6, 87.5}) ==
        doctest::Approx(-4.4547).epsilon(1e-4));
  CHECK(std::abs(delta_m(std::vector<double>{48.3, 85.3}, std::vector<double>{51.6, 87.5}) + 4.5) < 0.1);
  CHECK(delta_m(std::vector<double>{70, 30, 90}, std::vector<double>{70, 30, 90}) == 0.0);
  CHECK(delta_m(std::vector<double>{45}, std::vector<double>{50}) == doctest::Approx(-10.0));
  CHECK_THROWS_AS(delta_m(std::vector<double>{1, 2}, std::vector<double>{1}), ArgumentError);
  CHECK_THROWS_AS(delta_m(std::vector<double>{1}, std::vector<double>{0}), ArgumentError);
}

TEST_CASE("linear probe separates a separable toy and is deterministic") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.3);
  Tensor x(80, 3);
  std::vector<int> y(80);
  for (int i = 0; i < 80; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    const double c = i % 2 ? 2.0 : -2.0;
    x.row(i) << c + noise(rng), noise(rng), -c + noise(rng);
  }
  const LinearClassifier a = train_linear_probe(x, y, 2);
  const LinearClassifier b = train_linear_probe(x, y, 2);
  CHECK(accuracy(a.predict(x), y) == 1.0);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  CHECK(a.weights.allFinite());
  CHECK(a.grad_norm < 1e-5);

  // Three classes go through the softmax branch.
  std::vector<int> y3(80);
  for (int i = 0; i < 80; ++i) {
    y3[static_cast<std::size_t>(i)] = i % 3;
    x.row(i) << (i % 3 == 0 ? 3.0 : 0.0) + noise(rng), (i % 3 == 1 ? 3.0 : 0.0) + noise(rng),
        (i % 3 == 2 ? 3.0 : 0.0) + noise(rng);
  }
  CHECK(accuracy(train_linear_probe(x, y3, 3).predict(x), y3) == 1.0);

  const MlpClassifier m1 = train_mlp_probe(x, y3, 3, {.hidden = 16, .seed = 2});
  const MlpClassifier m2 = train_mlp_probe(x, y3, 3, {.hidden = 16, .seed = 2});
  CHECK(m1.predict(x) == m2.predict(x));
  CHECK(accuracy(m1.predict(x), y3) > 0.95);
}

TEST_CASE("single-class labels give a flagged degenerate probe") {
  const Tensor x = Tensor::Random(5, 2);
  const std::vector<int> y(5, 1);
  const LinearClassifier c = train_linear_probe(x, y, 2);
  CHECK(c.degenerate);
  CHECK(c.predict(x) == y);
  CHECK(train_mlp_probe(x, y, 2).degenerate);
}

TEST_CASE("embeddings and probe features have the documented shapes") {
  const GraphDataset ds = parse_tudataset(testing::fixture_dir("tiny"), "TINY");
  ModelDims dims{.in_dim = ds.feature_dim, .hidden = 256, .layers = 3, .nc_classes = 2, .gc_classes = 2};
  const ModelParams m = ModelParams::init(dims, 0);
  const auto graphs = pointers(ds, {0, 1});
  const EmbeddingSet e = embed_dataset(m, graphs);
  const EmbeddingSet again = embed_dataset(m, graphs);
  REQUIRE(e.embeddings.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(e.embeddings[i].rows() == 3);
    CHECK(e.embeddings[i].cols() == 256);
    CHECK(e.embeddings[i] == again.embeddings[i]);
    CHECK((e.embeddings[i].rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  const ProbeData nc = nc_probe_features(e.embeddings, graphs);
  CHECK(nc.rows() == 6);
  CHECK(nc.features.cols() == 256);
  const ProbeData gc = gc_probe_features(e.embeddings, graphs);
  CHECK(gc.rows() == 2);
  CHECK(gc.labels == std::vector<int>{1, 0});

  const auto inst = lp_eval_instances(graphs, 1);
  REQUIRE(inst.size() == 2);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    CHECK(inst[i].graph.edges.size() + inst[i].positives.size() == graphs[i]->edges.size());
    for (const Edge& e : inst[i].positives) CHECK_FALSE(inst[i].graph.has_edge(e.first, e.second));
    for (const Edge& e : inst[i].negatives) CHECK_FALSE(graphs[i]->has_edge(e.first, e.second));
  }
  // The triangle has no non-edges; the path has exactly one.
  CHECK(inst[0].negatives.empty());
  CHECK(inst[1].negatives.size() == inst[1].positives.size());
  std::vector<Tensor> lp_emb;
  for (const auto& i : inst) lp_emb.push_back(embed_dataset(m, std::vector<const Graph*>{&i.graph}).embeddings[0]);
  const ProbeData lp = lp_probe_features(lp_emb, inst);
  CHECK(lp.features.cols() == 512);

  // A one-node graph's GC feature is its embedding.
  Graph single;
  single.num_nodes = 1;
  single.node_features = Tensor::Ones(1, ds.feature_dim);
  single.graph_label = 0;
  const std::vector<const Graph*> one{&single};
  const EmbeddingSet se = embed_dataset(m, one);
  CHECK(gc_probe_features(se.embeddings, one).features == se.embeddings[0]);
}

TEST_CASE("probe on random embeddings of shuffled labels stays near the majority rate") {
  SyntheticConfig sc;
  sc.num_graphs = 200;
  GraphDataset ds = make_planted_dataset(sc);
  std::vector<int> labels;
  for (const auto& g : ds.graphs) labels.insert(labels.end(), g.node_labels.begin(), g.node_labels.end());
  std::mt19937_64 rng(21);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::size_t k = 0;
  for (auto& g : ds.graphs)
    for (auto& l : g.node_labels) l = labels[k++];

  const auto folds = make_folds(ds, 5, 0);
  const ModelParams m = ModelParams::init(model_dims(ds, tiny_train(StrategyKind::kISAME, TaskSet::all())), 9);
  const auto train = pointers(ds, folds[0].train_ids), test = pointers(ds, folds[0].test_ids);
  const auto acc = evaluate_task(m, Task::kNC, EvalMethod::kLinear, train, test, {});
  REQUIRE(acc);
  std::size_t ones = 0, total = 0;
  for (const Graph* g : test)
    for (int l : g->node_labels) ones += l == 1, ++total;
  const double majority = 100.0 * std::max(ones, total - ones) / static_cast<double>(total);
  CHECK(std::abs(*acc - majority) <= 5.0);
}

TEST_CASE("transfer with the source task as target matches the direct probe") {
  SyntheticConfig sc;
  sc.num_graphs = 30;
  sc.min_nodes = 6;
  sc.max_nodes = 10;
  const GraphDataset ds = make_planted_dataset(sc);
  const auto folds = make_folds(ds, 5, 0);
  TransferSpec spec{tiny_train(StrategyKind::kESAME, {Task::kNC}), Task::kNC, EvalMethod::kLinear};
  const Provenance prov{"P", "esame", "nc", 0, 3, "h"};
  const TransferOutcome out = transfer_experiment(ds, folds[0], spec, {}, prov);
  REQUIRE(out.rows.size() == 1);
  const auto direct = evaluate_task(out.training.params, Task::kNC, EvalMethod::kLinear,
                                    pointers(ds, folds[0].train_ids), pointers(ds, folds[0].test_ids), {});
  REQUIRE(direct);
  CHECK(out.rows[0].value == *direct);
  CHECK(out.rows[0].strategy == "esame");
  CHECK(out.rows[0].trained_tasks == "nc");
  CHECK(out.rows[0].method == "linear");
  CHECK(out.rows[0].config_hash == "h");

  // A cross-task transfer lands in the Fig1 family.
  spec.target = Task::kGC;
  const TransferOutcome cross = transfer_experiment(ds, folds[0], spec, {}, prov);
  REQUIRE(cross.rows.size() == 1);
  CHECK(cross.rows[0].experiment == "Fig1");
  spec.probe = EvalMethod::kHeads;
  CHECK_THROWS_AS(transfer_experiment(ds, folds[0], spec, {}, prov), ArgumentError);
}

TEST_CASE("heads are refused for an untrained task") {
  SyntheticConfig sc;
  sc.num_graphs = 20;
  const GraphDataset ds = make_planted_dataset(sc);
  const auto folds = make_folds(ds, 5, 0);
  const ModelParams m = ModelParams::init(model_dims(ds, tiny_train(StrategyKind::kClassicalSingleTask, {Task::kGC})), 1);
  EvalOptions opts;
  opts.method = EvalMethod::kHeads;
  CHECK_THROWS_AS(evaluate_fold(m, ds, folds[0], StrategyKind::kClassicalSingleTask, {Task::kGC},
                                {Task::kNC}, opts, {}),
                  ArgumentError);
  const auto rows = evaluate_fold(m, ds, folds[0], StrategyKind::kClassicalSingleTask, {Task::kGC},
                                  {Task::kGC}, opts, {});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].experiment == "Q1");
  CHECK(resolve_method(EvalMethod::kAuto, StrategyKind::kESAME) == EvalMethod::kLinear);
  CHECK(resolve_method(EvalMethod::kAuto, StrategyKind::kClassicalMultiTask) == EvalMethod::kHeads);
}

TEST_CASE("report: a baseline against itself has zero delta and CSVs round-trip") {
  std::vector<MetricRow> rows;
  for (int f = 0; f < 3; ++f) {
    rows.push_back(row("classical-st", "gc", "gc", f, 60 + f));
    rows.push_back(row("classical-st", "nc", "nc", f, 80 - f));
    rows.push_back(row("esame", "gc+nc", "gc", f, 58 + f));
    rows.push_back(row("esame", "gc+nc", "nc", f, 81));
  }
  const auto deltas = delta_table(rows);
  bool saw_baseline = false, saw_multi = false;
  for (const auto& d : deltas) {
    if (d.strategy == "classical-st") {
      saw_baseline = true;
      CHECK(d.delta == 0.0);
    }
    if (d.strategy == "esame") {
      saw_multi = true;
      CHECK(d.delta == doctest::Approx(delta_m(std::vector<double>{59, 81}, std::vector<double>{61, 79})));
      CHECK(d.folds == 3);
    }
  }
  CHECK(saw_baseline);
  CHECK(saw_multi);

  const std::string csv = metrics_csv(rows);
  const auto back = parse_metrics_csv(csv, "mem");
  REQUIRE(back.size() == rows.size());
  CHECK(metrics_csv(back) == csv);
  CHECK_THROWS_AS(parse_metrics_csv("nonsense\n1,2\n", "mem"), ParseError);

  const auto agg = aggregate(rows);
  for (const auto& a : agg)
    if (a.strategy == "classical-st" && a.eval_task == "gc") {
      CHECK(a.mean == doctest::Approx(61));
      CHECK(a.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
    }

  // Head-scored baselines win over probe-scored ones.
  auto mixed = rows;
  for (int f = 0; f < 3; ++f) {
    MetricRow r = row("classical-st", "gc", "gc", f, 30);
    r.method = "heads";
    mixed.push_back(r);
    r = row("classical-st", "nc", "nc", f, 90);
    r.method = "heads";
    mixed.push_back(r);
  }
  for (const auto& d : delta_table(mixed))
    if (d.strategy == "esame") CHECK(d.baseline == std::vector<double>{30, 90});

  // nc -> gc at 50 against gc -> gc at 61 on average is an 18% drop.
  auto transfer = rows;
  for (int f = 0; f < 3; ++f) {
    MetricRow r = row("classical-st", "nc", "gc", f, 50);
    r.experiment = "Fig1";
    transfer.push_back(r);
  }
  const auto drops = drop_matrix(transfer);
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].source == "nc");
  CHECK(drops[0].drop == doctest::Approx(100.0 * 11.0 / 61.0));

  const auto dir = std::filesystem::temp_directory_path() / "same_report_test";
  std::filesystem::remove_all(dir);
  write_report(dir, rows);
  for (const char* f : {"summary.csv", "delta_m.csv", "fig1_drop.csv", "tables.txt", "report.json"})
    CHECK(std::filesystem::exists(dir / f));
  std::filesystem::remove_all(dir);
}
