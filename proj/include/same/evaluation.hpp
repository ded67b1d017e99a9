#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "same/graph.hpp"
#include "same/model.hpp"
#include "same/probe.hpp"
#include "same/tasks.hpp"
#include "same/training.hpp"

namespace same {

/// Where an embedding set or a metric came from.
struct Provenance {
  std::string dataset;
  std::string strategy;
  std::string trained_tasks;
  int fold = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Frozen-encoder node embeddings, one matrix per graph.
struct EmbeddingSet {
  std::vector<Tensor> embeddings;
  Provenance provenance;
};

EmbeddingSet embed_dataset(const ModelParams& model, std::span<const Graph* const> graphs,
                           Provenance provenance = {});

/// Feature rows and labels for a probe.
struct ProbeData {
  Tensor features;
  std::vector<int> labels;
  std::size_t rows() const { return labels.size(); }
};

/// One mean-embedding row per labelled graph.
ProbeData gc_probe_features(std::span<const Tensor> embeddings, std::span<const Graph* const> graphs);
/// Every node of every graph with node labels, embeddings unaltered.
ProbeData nc_probe_features(std::span<const Tensor> embeddings, std::span<const Graph* const> graphs);

/// Held-out link-prediction material for one graph: the message-passing
/// graph with the positives removed, the removed positives and an equal
/// number of non-edges of the original graph.
struct LPEvalInstance {
  Graph graph;
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
};

/// One instance per graph with at least two edges. Deterministic in `seed`.
std::vector<LPEvalInstance> lp_eval_instances(std::span<const Graph* const> graphs,
                                              std::uint64_t seed);

/// [h_u ; h_v] rows (positives first, then negatives) with 1/0 labels.
/// `embeddings[i]` must be computed on `instances[i].graph`.
ProbeData lp_probe_features(std::span<const Tensor> embeddings,
                            std::span<const LPEvalInstance> instances);

/// How a trained model is scored on a task.
enum class EvalMethod {
  kAuto,    // own heads for classical strategies, linear probe for meta strategies
  kHeads,   // end-to-end with the trained task head
  kLinear,  // linear probe on frozen embeddings
  kMlp,     // one-hidden-layer probe on frozen embeddings
};

std::string_view to_string(EvalMethod method);
std::optional<EvalMethod> parse_eval_method(std::string_view name);
EvalMethod resolve_method(EvalMethod method, StrategyKind strategy);

struct EvalOptions {
  EvalMethod method = EvalMethod::kAuto;
  ProbeConfig linear;
  MlpProbeConfig mlp;
  /// Seeds the held-out link splits.
  std::uint64_t seed = 0;
};

/// Metric of `task` in percent (accuracy for GC/NC, ROC AUC for LP).
/// Probes are trained on `train_graphs` and scored on `test_graphs`.
/// Returns nullopt when the test graphs carry no usable labels for the task.
std::optional<double> evaluate_task(const ModelParams& model, Task task, EvalMethod method,
                                    std::span<const Graph* const> train_graphs,
                                    std::span<const Graph* const> test_graphs,
                                    const EvalOptions& options);

/// One metric value, keyed like the report files.
struct MetricRow {
  std::string experiment;  // Q1 | Q2 | Q3 | Fig1
  std::string dataset;
  std::string strategy;
  std::string trained_tasks;
  std::string eval_task;
  std::string method;
  int fold = 0;
  std::string metric;  // accuracy | auc
  double value = 0;    // percent
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Q3 for the network probe, Fig1 when the task was not trained, Q1 for
/// single-task models and Q2 for multi-task ones.
std::string experiment_tag(const TaskSet& trained, Task eval_task, EvalMethod method);
const char* metric_name(Task task);

/// Scores every task of `eval_tasks` on the fold's test graphs.
std::vector<MetricRow> evaluate_fold(const ModelParams& model, const GraphDataset& dataset,
                                     const FoldSplit& fold, StrategyKind strategy,
                                     const TaskSet& trained, const TaskSet& eval_tasks,
                                     const EvalOptions& options, const Provenance& provenance);

/// Train on `source` tasks, freeze the encoder, probe `target`.
struct TransferSpec {
  TrainConfig source;
  Task target = Task::kLP;
  EvalMethod probe = EvalMethod::kLinear;
};

struct TransferOutcome {
  std::vector<MetricRow> rows;
  TrainResult training;
};

TransferOutcome transfer_experiment(const GraphDataset& dataset, const FoldSplit& fold,
                                    const TransferSpec& spec, const EvalOptions& options,
                                    const Provenance& provenance);

}  // namespace same
