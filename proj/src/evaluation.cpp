#include "same/evaluation.hpp"

#include <random>

#include "same/episodes.hpp"
#include "same/errors.hpp"
#include "same/metrics.hpp"

namespace same {

EmbeddingSet embed_dataset(const ModelParams& model, std::span<const Graph* const> graphs,
                           Provenance provenance) {
  EmbeddingSet set;
  set.provenance = std::move(provenance);
  set.embeddings.reserve(graphs.size());
  for (const Graph* g : graphs) set.embeddings.push_back(encode_graph(model, *g));
  return set;
}

ProbeData gc_probe_features(std::span<const Tensor> embeddings,
                            std::span<const Graph* const> graphs) {
  if (embeddings.size() != graphs.size()) throw ArgumentError("gc_probe_features: size mismatch");
  ProbeData out;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i]->graph_label && embeddings[i].rows() > 0) keep.push_back(static_cast<Eigen::Index>(i));
  const Eigen::Index dim = embeddings.empty() ? 0 : embeddings[0].cols();
  out.features.resize(static_cast<Eigen::Index>(keep.size()), dim);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Tensor& e = embeddings[keep[r]];
    out.features.row(static_cast<Eigen::Index>(r)) = e.colwise().mean();
    out.labels.push_back(*graphs[keep[r]]->graph_label);
  }
  return out;
}

ProbeData nc_probe_features(std::span<const Tensor> embeddings,
                            std::span<const Graph* const> graphs) {
  if (embeddings.size() != graphs.size()) throw ArgumentError("nc_probe_features: size mismatch");
  ProbeData out;
  Eigen::Index rows = 0, dim = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i]->has_node_labels()) rows += graphs[i]->num_nodes, dim = embeddings[i].cols();
  out.features.resize(rows, dim);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i]->has_node_labels()) continue;
    out.features.middleRows(r, graphs[i]->num_nodes) = embeddings[i];
    r += graphs[i]->num_nodes;
    out.labels.insert(out.labels.end(), graphs[i]->node_labels.begin(),
                      graphs[i]->node_labels.end());
  }
  return out;
}

std::vector<LPEvalInstance> lp_eval_instances(std::span<const Graph* const> graphs,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LPEvalInstance> out;
  for (const Graph* g : graphs) {
    if (g->edges.size() < 2) continue;
    std::vector<Edge> edges = g->edges;
    std::shuffle(edges.begin(), edges.end(), rng);
    const std::size_t removed = lp_removed_count(edges.size());
    LPEvalInstance inst;
    inst.positives = canonical_edges({edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(removed)});
    inst.graph = with_edges(*g, {edges.begin() + static_cast<std::ptrdiff_t>(removed), edges.end()});
    inst.negatives = sample_negative_edges(*g, removed, rng);
    out.push_back(std::move(inst));
  }
  return out;
}

ProbeData lp_probe_features(std::span<const Tensor> embeddings,
                            std::span<const LPEvalInstance> instances) {
  if (embeddings.size() != instances.size()) throw ArgumentError("lp_probe_features: size mismatch");
  ProbeData out;
  Eigen::Index rows = 0, dim = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    rows += static_cast<Eigen::Index>(instances[i].positives.size() + instances[i].negatives.size());
    dim = embeddings[i].cols();
  }
  out.features.resize(rows, 2 * dim);
  Eigen::Index r = 0;
  auto emit = [&](const Tensor& e, const Edge& pair, int label) {
    out.features.row(r).head(dim) = e.row(pair.first);
    out.features.row(r).tail(dim) = e.row(pair.second);
    out.labels.push_back(label);
    ++r;
  };
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const Edge& p : instances[i].positives) emit(embeddings[i], p, 1);
    for (const Edge& p : instances[i].negatives) emit(embeddings[i], p, 0);
  }
  return out;
}

std::string_view to_string(EvalMethod method) {
  switch (method) {
    case EvalMethod::kAuto: return "auto";
    case EvalMethod::kHeads: return "heads";
    case EvalMethod::kLinear: return "linear";
    case EvalMethod::kMlp: return "mlp";
  }
  return "?";
}

std::optional<EvalMethod> parse_eval_method(std::string_view name) {
  for (EvalMethod m : {EvalMethod::kAuto, EvalMethod::kHeads, EvalMethod::kLinear, EvalMethod::kMlp})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

EvalMethod resolve_method(EvalMethod method, StrategyKind strategy) {
  if (method != EvalMethod::kAuto) return method;
  return is_meta(strategy) ? EvalMethod::kLinear : EvalMethod::kHeads;
}

namespace {

bool has_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int l : labels) (l ? pos : neg) = true;
  return pos && neg;
}

std::vector<Tensor> embed_instances(const ModelParams& model,
                                    std::span<const LPEvalInstance> instances) {
  std::vector<Tensor> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode_graph(model, inst.graph));
  return out;
}

std::optional<double> score_heads(const ModelParams& model, Task task,
                                  std::span<const Graph* const> test, const EvalOptions& options) {
  std::vector<int> preds, labels;
  auto argmax_rows = [](const Tensor& logp, std::vector<int>& into) {
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
      Eigen::Index arg = 0;
      logp.row(i).maxCoeff(&arg);
      into.push_back(static_cast<int>(arg));
    }
  };
  switch (task) {
    case Task::kGC:
      for (const Graph* g : test) {
        if (!g->graph_label || g->num_nodes == 0) continue;
        argmax_rows(gc_forward(model, encode_graph(model, *g)), preds);
        labels.push_back(*g->graph_label);
      }
      break;
    case Task::kNC:
      for (const Graph* g : test) {
        if (!g->has_node_labels()) continue;
        argmax_rows(nc_forward(model, encode_graph(model, *g)), preds);
        labels.insert(labels.end(), g->node_labels.begin(), g->node_labels.end());
      }
      break;
    case Task::kLP: {
      const auto instances = lp_eval_instances(test, options.seed ^ 0x7E57ULL);
      std::vector<double> scores;
      for (const auto& inst : instances) {
        const Tensor emb = encode_graph(model, inst.graph);
        std::vector<Edge> pairs = inst.positives;
        pairs.insert(pairs.end(), inst.negatives.begin(), inst.negatives.end());
        const auto probs = lp_forward(model, emb, pairs);
        scores.insert(scores.end(), probs.begin(), probs.end());
        labels.insert(labels.end(), inst.positives.size(), 1);
        labels.insert(labels.end(), inst.negatives.size(), 0);
      }
      if (!has_both_classes(labels)) return std::nullopt;
      return 100.0 * roc_auc(scores, labels);
    }
  }
  if (labels.empty()) return std::nullopt;
  return 100.0 * accuracy(preds, labels);
}

template <class Classifier>
std::optional<double> score_classifier(const Classifier& clf, Task task, const ProbeData& test) {
  if (test.rows() == 0) return std::nullopt;
  if (task == Task::kLP) {
    if (!has_both_classes(test.labels)) return std::nullopt;
    return 100.0 * roc_auc(clf.positive_scores(test.features), test.labels);
  }
  return 100.0 * accuracy(clf.predict(test.features), test.labels);
}

std::optional<double> score_probe(const ModelParams& model, Task task, EvalMethod method,
                                  std::span<const Graph* const> train,
                                  std::span<const Graph* const> test, const EvalOptions& options) {
  ProbeData fit, held;
  int classes = 2;
  switch (task) {
    case Task::kGC: {
      const auto a = embed_dataset(model, train), b = embed_dataset(model, test);
      fit = gc_probe_features(a.embeddings, train);
      held = gc_probe_features(b.embeddings, test);
      classes = model.dims.gc_classes;
      break;
    }
    case Task::kNC: {
      const auto a = embed_dataset(model, train), b = embed_dataset(model, test);
      fit = nc_probe_features(a.embeddings, train);
      held = nc_probe_features(b.embeddings, test);
      classes = model.dims.nc_classes;
      break;
    }
    case Task::kLP: {
      const auto fit_inst = lp_eval_instances(train, options.seed ^ 0x7A1DULL);
      const auto held_inst = lp_eval_instances(test, options.seed ^ 0x7E57ULL);
      fit = lp_probe_features(embed_instances(model, fit_inst), fit_inst);
      held = lp_probe_features(embed_instances(model, held_inst), held_inst);
      break;
    }
  }
  if (fit.rows() == 0) return std::nullopt;
  if (method == EvalMethod::kMlp) {
    MlpProbeConfig cfg = options.mlp;
    cfg.seed ^= options.seed;
    return score_classifier(train_mlp_probe(fit.features, fit.labels, classes, cfg), task, held);
  }
  return score_classifier(train_linear_probe(fit.features, fit.labels, classes, options.linear),
                          task, held);
}

std::vector<const Graph*> pick(const GraphDataset& dataset, const std::vector<int>& ids) {
  std::vector<const Graph*> out;
  for (int id : ids) out.push_back(&dataset.graphs.at(static_cast<std::size_t>(id)));
  return out;
}

}  // namespace

std::optional<double> evaluate_task(const ModelParams& model, Task task, EvalMethod method,
                                    std::span<const Graph* const> train_graphs,
                                    std::span<const Graph* const> test_graphs,
                                    const EvalOptions& options) {
  if (method == EvalMethod::kAuto) throw ArgumentError("evaluate_task: resolve the method first");
  if (method == EvalMethod::kHeads) return score_heads(model, task, test_graphs, options);
  return score_probe(model, task, method, train_graphs, test_graphs, options);
}

const char* metric_name(Task task) { return task == Task::kLP ? "auc" : "accuracy"; }

std::string experiment_tag(const TaskSet& trained, Task eval_task, EvalMethod method) {
  if (method == EvalMethod::kMlp) return "Q3";
  if (!trained.contains(eval_task)) return "Fig1";
  return trained.size() == 1 ? "Q1" : "Q2";
}

std::vector<MetricRow> evaluate_fold(const ModelParams& model, const GraphDataset& dataset,
                                     const FoldSplit& fold, StrategyKind strategy,
                                     const TaskSet& trained, const TaskSet& eval_tasks,
                                     const EvalOptions& options, const Provenance& provenance) {
  const EvalMethod method = resolve_method(options.method, strategy);
  const auto train_graphs = pick(dataset, fold.train_ids);
  const auto test_graphs = pick(dataset, fold.test_ids);
  std::vector<MetricRow> rows;
  for (Task task : eval_tasks.tasks()) {
    if (method == EvalMethod::kHeads && !trained.contains(task))
      throw ArgumentError("evaluate: the " + std::string(to_string(task)) +
                          " head was not trained; use a probe");
    const auto value = evaluate_task(model, task, method, train_graphs, test_graphs, options);
    if (!value) continue;
    MetricRow row;
    row.experiment = experiment_tag(trained, task, method);
    row.dataset = provenance.dataset;
    row.strategy = std::string(to_string(strategy));
    row.trained_tasks = trained.label();
    row.eval_task = std::string(to_string(task));
    row.method = std::string(to_string(method));
    row.fold = fold.fold_index;
    row.metric = metric_name(task);
    row.value = *value;
    row.seed = provenance.seed;
    row.config_hash = provenance.config_hash;
    rows.push_back(std::move(row));
  }
  return rows;
}

TransferOutcome transfer_experiment(const GraphDataset& dataset, const FoldSplit& fold,
                                    const TransferSpec& spec, const EvalOptions& options,
                                    const Provenance& provenance) {
  if (spec.probe != EvalMethod::kLinear && spec.probe != EvalMethod::kMlp)
    throw ArgumentError("transfer: the probe must be linear or mlp");
  TransferOutcome out;
  out.training = train(dataset, fold, spec.source);
  EvalOptions opts = options;
  opts.method = spec.probe;
  TaskSet target;
  target.insert(spec.target);
  out.rows = evaluate_fold(out.training.params, dataset, fold, spec.source.strategy,
                           spec.source.tasks, target, opts, provenance);
  return out;
}

}  // namespace same
