#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "same/episodes.hpp"
#include "same/graph.hpp"
#include "same/model.hpp"
#include "same/params.hpp"
#include "same/tasks.hpp"

namespace same {

enum class StrategyKind {
  kClassicalSingleTask,
  kClassicalMultiTask,
  kTraditionalMeta,
  kFineTune,
  kISAME,
  kESAME,
};

/// CLI spelling: classical-st, classical-mt, trad-meta, finetune, isame, esame.
std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);
bool is_meta(StrategyKind kind);

enum class MetaGradientMode { kFirstOrder, kSecondOrder };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig config);
  /// One bias-corrected update; entries with zero moments stay untouched.
  void step(ParamSet& params, const GradientMap& grad);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct EarlyStopConfig {
  int patience = 50;   // evaluations without improvement
  int eval_every = 5;  // epochs
};

/// Tracks the best validation value; lower is better.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  /// Returns true when `value` improves on the best so far.
  bool record(double value, int epoch);
  bool should_stop() const { return bad_evals_ >= patience_; }
  double best_value() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int bad_evals_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = -1;
};

struct TrainConfig {
  StrategyKind strategy = StrategyKind::kESAME;
  /// Trained tasks. For kFineTune these are the fine-tuning pair; the
  /// pretraining phase always uses all three tasks.
  TaskSet tasks = TaskSet::all();
  double inner_lr = 0.01;
  int inner_steps = 1;
  AdamConfig outer;
  int epochs = 200;
  int batch_size = 30;
  TaskWeights weights;
  MetaGradientMode meta_gradient = MetaGradientMode::kFirstOrder;
  EarlyStopConfig early_stop;
  std::uint64_t seed = 0;
  int hidden = 256;
  int layers = 3;
  bool final_normalize = true;
  /// Abort when any training loss exceeds this.
  double divergence_threshold = 1e6;

  /// Throws ArgumentError on an invalid combination.
  void validate() const;
};

/// Per-task loss of `task` on `data`, optionally only tracking gradients for
/// parameters in `track` (untracked ones get zero gradient).
ObjectiveFn task_objective(const ModelDims& dims, Task task, const TaskData& data,
                           std::vector<bool> track = {});

/// sum_t weights[t] * L_t over the tasks of `tasks` present in `data`.
/// `per_task`, when given, receives the unweighted component losses.
ObjectiveFn combined_objective(const ModelDims& dims, const TaskSet& tasks, const TaskData& data,
                               const TaskWeights& weights,
                               std::array<double, 3>* per_task = nullptr);

/// Every configured task on every graph: GC on graph labels, NC on all node
/// labels, LP on the union of the support and target pairs of split_links.
TaskData full_supervision(std::span<const Graph* const> graphs, const TaskSet& tasks,
                          std::mt19937_64& rng);

struct AdaptResult {
  ParamSet adapted;                  // theta'(steps)
  std::vector<ParamSet> trajectory;  // theta'(0) .. theta'(steps-1)
  double support_loss = 0;           // at theta'(0)
  std::vector<double> grad_norms;    // per step, over the adapted subset
};

/// theta'(s) = theta'(s-1) - alpha * grad L(theta'(s-1)) on the entries of
/// `adaptable`; other entries are copied bit-for-bit.
AdaptResult adapt(const ObjectiveFn& support, const ParamSet& params,
                  const std::vector<bool>& adaptable, double alpha, int steps);

struct MetaGradient {
  GradientMap grad;  // d L_target(theta'(theta)) / d theta
  double target_loss = 0;
  AdaptResult adaptation;
};

/// Gradient of the post-adaptation target loss with respect to the
/// pre-adaptation parameters. First order uses grad L_T(theta') directly;
/// second order chains (I - alpha H_S P) back through every inner step,
/// with P the projection onto `adaptable` and H_S v from
/// hessian_vector_product.
MetaGradient meta_gradient(const ObjectiveFn& support, const ObjectiveFn& target,
                           const ParamSet& params, const std::vector<bool>& adaptable,
                           double alpha, int steps, MetaGradientMode mode);

struct StepResult {
  double loss = 0;                  // o_loss for meta steps, batch loss otherwise
  std::array<double, 3> task_loss{};  // unweighted, indexed by Task
  std::array<bool, 3> task_ran{};
  /// theta'(t) per task for SAME steps.
  std::array<std::optional<ParamSet>, 3> adapted;
  std::vector<std::string> warnings;
};

/// One SAME update: per task adapt on S(t), test on T(t), Adam step on the
/// summed meta-gradient. iSAME adapts encoder + head, eSAME the head only.
StepResult same_outer_step(ModelParams& model, Adam& optimizer, const MultiTaskEpisode& episode,
                           const TrainConfig& config);

/// Post-adaptation target losses of an episode without updating the model.
StepResult same_episode_loss(const ModelParams& model, const MultiTaskEpisode& episode,
                             const TrainConfig& config);

/// Classical update: all configured tasks on all graphs, one Adam step.
StepResult classical_mt_step(ModelParams& model, Adam& optimizer,
                             std::span<const Graph* const> batch, const TrainConfig& config,
                             std::mt19937_64& rng);

/// Support and target graph sets for traditional meta-learning (60/40).
struct SharedEpisode {
  TaskData support;
  TaskData target;
};
SharedEpisode build_shared_episode(std::span<const Graph* const> batch, const TaskSet& tasks,
                                   std::mt19937_64& rng);

/// MAML over the combined multi-task loss on one shared support/target pair.
StepResult traditional_meta_step(ModelParams& model, Adam& optimizer,
                                 const SharedEpisode& episode, const TrainConfig& config);

struct CurveRow {
  int epoch = 0;
  std::string phase;
  std::array<std::optional<double>, 3> train_loss;
  std::optional<double> val_metric;
  double wall_time = 0;
};

struct TrainResult {
  ModelParams params;  // best-validation snapshot
  std::vector<CurveRow> curve;
  int best_epoch = -1;
  double best_val = 0;
  bool early_stopped = false;
  long updates = 0;
  std::vector<std::string> log;
};

/// Optional hook called after every epoch (for progress output).
using EpochCallback = std::function<void(const CurveRow&)>;

/// Full training run on the fold's training graphs, early-stopped on the
/// validation graphs. Deterministic for a fixed config.seed.
TrainResult train(const GraphDataset& dataset, const FoldSplit& fold, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Pretrain classical multi-task on all three tasks, then classical
/// multi-task on config.tasks, both early-stopped.
TrainResult fine_tune(const GraphDataset& dataset, const FoldSplit& fold, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

ModelDims model_dims(const GraphDataset& dataset, const TrainConfig& config);

}  // namespace same
