#include "same/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "same/errors.hpp"

namespace same {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kClassicalSingleTask: return "classical-st";
    case StrategyKind::kClassicalMultiTask: return "classical-mt";
    case StrategyKind::kTraditionalMeta: return "trad-meta";
    case StrategyKind::kFineTune: return "finetune";
    case StrategyKind::kISAME: return "isame";
    case StrategyKind::kESAME: return "esame";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (StrategyKind k : {StrategyKind::kClassicalSingleTask, StrategyKind::kClassicalMultiTask,
                         StrategyKind::kTraditionalMeta, StrategyKind::kFineTune,
                         StrategyKind::kISAME, StrategyKind::kESAME})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

bool is_meta(StrategyKind kind) {
  return kind == StrategyKind::kISAME || kind == StrategyKind::kESAME ||
         kind == StrategyKind::kTraditionalMeta;
}

Adam::Adam(const ParamSet& params, AdamConfig config) : cfg_(config) {
  for (const auto& v : params.values) {
    m_.push_back(Tensor::Zero(v.rows(), v.cols()));
    v_.push_back(Tensor::Zero(v.rows(), v.cols()));
  }
}

void Adam::step(ParamSet& params, const GradientMap& grad) {
  if (grad.size() != params.size() || m_.size() != params.size())
    throw ArgumentError("Adam::step: parameter/gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = grad[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    params.values[i].array() -=
        cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
  }
  for (const auto& v : params.values)
    if (!v.allFinite()) throw NumericError("Adam::step produced non-finite parameters");
}

bool EarlyStopping::record(double value, int epoch) {
  if (value < best_) {
    best_ = value;
    best_epoch_ = epoch;
    bad_evals_ = 0;
    return true;
  }
  ++bad_evals_;
  return false;
}

void TrainConfig::validate() const {
  if (!(inner_lr > 0)) throw ArgumentError("inner learning rate must be > 0");
  if (!(outer.lr > 0)) throw ArgumentError("outer learning rate must be > 0");
  if (inner_steps < 1) throw ArgumentError("inner steps must be >= 1");
  if (tasks.empty()) throw ArgumentError("task set must be nonempty");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (early_stop.patience < 1 || early_stop.eval_every < 1)
    throw ArgumentError("early stopping patience and eval interval must be >= 1");
  if (hidden < 1 || layers < 1) throw ArgumentError("model dimensions must be positive");
  for (double w : {weights.gc, weights.nc, weights.lp})
    if (w < 0 || w > 1) throw ArgumentError("task weights must lie in [0, 1]");
  if (strategy == StrategyKind::kClassicalSingleTask && tasks.size() != 1)
    throw ArgumentError("classical-st trains exactly one task");
  if (strategy == StrategyKind::kFineTune && tasks.size() != 2)
    throw ArgumentError("finetune requires exactly two fine-tuning tasks");
  if ((strategy == StrategyKind::kISAME || strategy == StrategyKind::kESAME) &&
      batch_size < static_cast<int>(tasks.size()))
    throw ArgumentError("batch size must be at least the number of tasks for SAME episodes");
}

ModelDims model_dims(const GraphDataset& dataset, const TrainConfig& config) {
  ModelDims d;
  d.in_dim = dataset.feature_dim;
  d.hidden = config.hidden;
  d.layers = config.layers;
  d.nc_classes = std::max(1, dataset.num_node_classes);
  d.gc_classes = std::max(1, dataset.num_graph_classes);
  d.final_normalize = config.final_normalize;
  return d;
}

namespace {

Var task_loss_var(BoundModel& model, Task task, const TaskData& data) {
  switch (task) {
    case Task::kGC: return model.gc_loss(data.gc);
    case Task::kNC: return model.nc_loss(data.nc);
    case Task::kLP: return model.lp_loss(data.lp);
  }
  throw ArgumentError("unknown task");
}

using LossBuilder = std::function<Var(BoundModel&)>;

// Evaluates a loss and its gradient; parameters outside `track` (when
// nonempty) are bound as constants and receive zero gradient.
double evaluate(const ModelDims& dims, const ParamSet& params, const std::vector<bool>& track,
                GradientMap& grad, const LossBuilder& build) {
  Tape tape;
  std::optional<BoundModel> model;
  if (track.empty())
    model.emplace(tape, dims, params, true);
  else
    model.emplace(tape, dims, params, track);
  Var loss = build(*model);
  grad = tape.backward(loss, params);
  return loss.value()(0, 0);
}

void check_loss(double loss, const char* where) {
  if (!std::isfinite(loss)) throw NumericError(std::string(where) + ": non-finite loss");
}

}  // namespace

ObjectiveFn task_objective(const ModelDims& dims, Task task, const TaskData& data,
                           std::vector<bool> track) {
  return [dims, task, &data, track = std::move(track)](const ParamSet& params, GradientMap& grad) {
    return evaluate(dims, params, track, grad,
                    [&](BoundModel& m) { return task_loss_var(m, task, data); });
  };
}

ObjectiveFn combined_objective(const ModelDims& dims, const TaskSet& tasks, const TaskData& data,
                               const TaskWeights& weights, std::array<double, 3>* per_task) {
  return [dims, tasks, &data, weights, per_task](const ParamSet& params, GradientMap& grad) {
    return evaluate(dims, params, {}, grad, [&](BoundModel& m) {
      std::optional<Var> total;
      for (Task t : tasks.tasks()) {
        if (!data.has(t)) continue;
        Var l = task_loss_var(m, t, data);
        if (per_task) (*per_task)[static_cast<std::size_t>(t)] = l.value()(0, 0);
        Var weighted = scale(l, weights[t]);
        total = total ? add(*total, weighted) : weighted;
      }
      if (!total) throw ArgumentError("combined objective: no task has data");
      return *total;
    });
  };
}

TaskData full_supervision(std::span<const Graph* const> graphs, const TaskSet& tasks,
                          std::mt19937_64& rng) {
  TaskData data;
  for (const Graph* g : graphs) {
    if (tasks.contains(Task::kGC) && g->graph_label) data.gc.push_back(g);
    if (tasks.contains(Task::kNC) && g->has_node_labels() && g->num_nodes > 0) {
      NCInstance inst{g, {}};
      inst.labelled_nodes.resize(static_cast<std::size_t>(g->num_nodes));
      std::iota(inst.labelled_nodes.begin(), inst.labelled_nodes.end(), 0);
      data.nc.push_back(std::move(inst));
    }
    if (tasks.contains(Task::kLP)) {
      if (auto split = split_links(*g, rng)) {
        LPInstance inst = std::move(split->support);
        inst.positive_edges.insert(inst.positive_edges.end(), split->target.positive_edges.begin(),
                                   split->target.positive_edges.end());
        inst.negative_edges.insert(inst.negative_edges.end(), split->target.negative_edges.begin(),
                                   split->target.negative_edges.end());
        data.lp.push_back(std::move(inst));
      }
    }
  }
  return data;
}

AdaptResult adapt(const ObjectiveFn& support, const ParamSet& params,
                  const std::vector<bool>& adaptable, double alpha, int steps) {
  if (steps < 1) throw ArgumentError("adapt: steps must be >= 1");
  AdaptResult result;
  result.adapted = params;
  for (int s = 0; s < steps; ++s) {
    result.trajectory.push_back(result.adapted);
    GradientMap g;
    const double loss = support(result.adapted, g);
    if (!std::isfinite(loss) || !g.all_finite())
      throw NumericError("adapt: non-finite support loss/gradient at inner step " +
                         std::to_string(s) + " (loss=" + std::to_string(loss) + ")");
    if (s == 0) result.support_loss = loss;
    g.restrict_to(adaptable);
    result.grad_norms.push_back(g.norm());
    result.adapted.add_scaled(g, -alpha, adaptable);
  }
  return result;
}

MetaGradient meta_gradient(const ObjectiveFn& support, const ObjectiveFn& target,
                           const ParamSet& params, const std::vector<bool>& adaptable,
                           double alpha, int steps, MetaGradientMode mode) {
  MetaGradient out;
  out.adaptation = adapt(support, params, adaptable, alpha, steps);
  out.target_loss = target(out.adaptation.adapted, out.grad);
  check_loss(out.target_loss, "meta_gradient");
  if (mode == MetaGradientMode::kSecondOrder) {
    // d theta'(s) / d theta'(s-1) = I - alpha P H_S(theta'(s-1)); its
    // transpose applied to v is v - alpha H_S P v.
    for (int s = steps - 1; s >= 0; --s) {
      GradientMap projected = out.grad;
      projected.restrict_to(adaptable);
      GradientMap hv = hessian_vector_product(support, out.adaptation.trajectory[s], projected);
      out.grad.add_scaled(hv, -alpha);
    }
  }
  if (!out.grad.all_finite()) throw NumericError("meta_gradient: non-finite gradient");
  return out;
}

namespace {

StepResult same_components(const ModelParams& model, const MultiTaskEpisode& episode,
                           const TrainConfig& config, GradientMap* total_grad) {
  StepResult result;
  const bool adapt_encoder = config.strategy == StrategyKind::kISAME;
  if (total_grad) *total_grad = GradientMap::zeros_like(model.params);
  for (Task t : config.tasks.tasks()) {
    if (!episode.has(t)) {
      result.warnings.push_back("episode has no " + std::string(to_string(t)) +
                                " data; task skipped");
      continue;
    }
    const std::vector<bool> mask = model.task_mask(t, adapt_encoder);
    // First-order adaptation only needs gradients on the adapted subset.
    ObjectiveFn support = task_objective(
        model.dims, t, episode.support,
        config.meta_gradient == MetaGradientMode::kFirstOrder ? mask : std::vector<bool>{});
    ObjectiveFn target = task_objective(model.dims, t, episode.target);
    MetaGradient mg = meta_gradient(support, target, model.params, mask, config.inner_lr,
                                    config.inner_steps, config.meta_gradient);
    const double w = episode.weights[t];
    const auto ti = static_cast<std::size_t>(t);
    result.task_loss[ti] = mg.target_loss;
    result.task_ran[ti] = true;
    result.loss += w * mg.target_loss;
    if (total_grad) total_grad->add_scaled(mg.grad, w);
    result.adapted[ti] = std::move(mg.adaptation.adapted);
  }
  return result;
}

}  // namespace

StepResult same_outer_step(ModelParams& model, Adam& optimizer, const MultiTaskEpisode& episode,
                           const TrainConfig& config) {
  if (config.strategy != StrategyKind::kISAME && config.strategy != StrategyKind::kESAME)
    throw ArgumentError("same_outer_step: strategy must be isame or esame");
  GradientMap grad;
  StepResult result = same_components(model, episode, config, &grad);
  if (std::none_of(result.task_ran.begin(), result.task_ran.end(), [](bool b) { return b; })) {
    result.warnings.push_back("episode had no usable task; no update");
    return result;
  }
  optimizer.step(model.params, grad);
  return result;
}

StepResult same_episode_loss(const ModelParams& model, const MultiTaskEpisode& episode,
                             const TrainConfig& config) {
  return same_components(model, episode, config, nullptr);
}

StepResult classical_mt_step(ModelParams& model, Adam& optimizer,
                             std::span<const Graph* const> batch, const TrainConfig& config,
                             std::mt19937_64& rng) {
  const TaskData data = full_supervision(batch, config.tasks, rng);
  StepResult result;
  ObjectiveFn objective =
      combined_objective(model.dims, config.tasks, data, config.weights, &result.task_loss);
  GradientMap grad;
  result.loss = objective(model.params, grad);
  check_loss(result.loss, "classical_mt_step");
  for (Task t : config.tasks.tasks()) result.task_ran[static_cast<std::size_t>(t)] = data.has(t);
  optimizer.step(model.params, grad);
  return result;
}

SharedEpisode build_shared_episode(std::span<const Graph* const> batch, const TaskSet& tasks,
                                   std::mt19937_64& rng) {
  if (batch.size() < 2) throw ArgumentError("traditional meta-learning needs >= 2 graphs per batch");
  std::vector<const Graph*> shuffled(batch.begin(), batch.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t s = gc_support_count(shuffled.size());
  std::span<const Graph* const> all(shuffled);
  SharedEpisode ep;
  ep.support = full_supervision(all.subspan(0, s), tasks, rng);
  ep.target = full_supervision(all.subspan(s), tasks, rng);
  return ep;
}

namespace {

StepResult trad_components(const ModelParams& model, const SharedEpisode& episode,
                           const TrainConfig& config, GradientMap* grad_out) {
  StepResult result;
  ObjectiveFn support = combined_objective(model.dims, config.tasks, episode.support, config.weights);
  ObjectiveFn target = combined_objective(model.dims, config.tasks, episode.target, config.weights,
                                          &result.task_loss);
  const std::vector<bool> all(model.params.size(), true);
  MetaGradient mg = meta_gradient(support, target, model.params, all, config.inner_lr,
                                  config.inner_steps, config.meta_gradient);
  result.loss = mg.target_loss;
  for (Task t : config.tasks.tasks())
    result.task_ran[static_cast<std::size_t>(t)] = episode.target.has(t);
  if (grad_out) *grad_out = std::move(mg.grad);
  return result;
}

}  // namespace

StepResult traditional_meta_step(ModelParams& model, Adam& optimizer,
                                 const SharedEpisode& episode, const TrainConfig& config) {
  GradientMap grad;
  StepResult result = trad_components(model, episode, config, &grad);
  optimizer.step(model.params, grad);
  return result;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<const Graph*> pick(const GraphDataset& dataset, const std::vector<int>& ids) {
  std::vector<const Graph*> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(&dataset.graphs.at(static_cast<std::size_t>(id)));
  return out;
}

std::size_t min_batch(const TrainConfig& config) {
  switch (config.strategy) {
    case StrategyKind::kISAME:
    case StrategyKind::kESAME: return config.tasks.size();
    case StrategyKind::kTraditionalMeta: return 2;
    default: return 1;
  }
}

// Fixed validation material, built once per phase with its own seed.
class Validator {
 public:
  Validator(std::vector<const Graph*> graphs, const TrainConfig& config, std::uint64_t seed)
      : graphs_(std::move(graphs)), config_(config) {
    std::mt19937_64 rng(seed);
    if (graphs_.empty()) return;
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    std::span<const Graph* const> all(graphs_);
    switch (config.strategy) {
      case StrategyKind::kISAME:
      case StrategyKind::kESAME:
        for (std::size_t i = 0; i < all.size(); i += bs) {
          auto batch = all.subspan(i, std::min(bs, all.size() - i));
          if (batch.size() < min_batch(config)) continue;
          episodes_.push_back(build_episode(batch, config.weights, rng, config.tasks));
        }
        break;
      case StrategyKind::kTraditionalMeta:
        for (std::size_t i = 0; i < all.size(); i += bs) {
          auto batch = all.subspan(i, std::min(bs, all.size() - i));
          if (batch.size() < 2) continue;
          shared_.push_back(build_shared_episode(batch, config.tasks, rng));
        }
        break;
      default:
        full_ = full_supervision(all, config.tasks, rng);
        break;
    }
  }

  bool empty() const { return episodes_.empty() && shared_.empty() && !full_; }

  /// Sum over tasks of the mean per-task validation loss.
  double metric(const ModelParams& model) const {
    std::array<double, 3> sums{};
    std::array<int, 3> counts{};
    auto add = [&](const StepResult& r) {
      for (std::size_t t = 0; t < 3; ++t)
        if (r.task_ran[t]) sums[t] += r.task_loss[t], ++counts[t];
    };
    for (const auto& ep : episodes_) add(same_episode_loss(model, ep, config_));
    for (const auto& ep : shared_) add(trad_components(model, ep, config_, nullptr));
    if (full_) {
      StepResult r;
      ObjectiveFn f =
          combined_objective(model.dims, config_.tasks, *full_, config_.weights, &r.task_loss);
      GradientMap unused;
      f(model.params, unused);
      for (Task t : config_.tasks.tasks())
        r.task_ran[static_cast<std::size_t>(t)] = full_->has(t);
      add(r);
    }
    double total = 0;
    for (std::size_t t = 0; t < 3; ++t)
      if (counts[t]) total += sums[t] / counts[t];
    return total;
  }

 private:
  std::vector<const Graph*> graphs_;
  TrainConfig config_;
  std::vector<MultiTaskEpisode> episodes_;
  std::vector<SharedEpisode> shared_;
  std::optional<TaskData> full_;
};

void run_phase(ModelParams& model, const GraphDataset& dataset, const FoldSplit& fold,
               const TrainConfig& config, const std::string& phase, TrainResult& result,
               const EpochCallback& on_epoch) {
  const std::uint64_t phase_salt = phase == "finetune" ? 2 : 1;
  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + phase_salt);
  Adam optimizer(model.params, config.outer);
  const Validator validator(pick(dataset, fold.val_ids), config, config.seed ^ 0x5A5A5A5AULL);
  EarlyStopping stopper(config.early_stop.patience);
  ModelParams best = model;
  std::vector<const Graph*> train_graphs = pick(dataset, fold.train_ids);
  if (train_graphs.size() < min_batch(config))
    throw ArgumentError("training split too small for strategy " +
                        std::string(to_string(config.strategy)));
  const auto start = Clock::now();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  result.log.push_back("phase " + phase + " start: strategy=" +
                       std::string(to_string(config.strategy)) + " tasks=" + config.tasks.label());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_graphs.begin(), train_graphs.end(), rng);
    std::array<double, 3> sums{};
    std::array<int, 3> counts{};
    std::span<const Graph* const> all(train_graphs);
    for (std::size_t i = 0; i < all.size(); i += bs) {
      auto batch = all.subspan(i, std::min(bs, all.size() - i));
      if (batch.size() < min_batch(config)) continue;
      StepResult step;
      switch (config.strategy) {
        case StrategyKind::kISAME:
        case StrategyKind::kESAME: {
          const MultiTaskEpisode ep = build_episode(batch, config.weights, rng, config.tasks);
          step = same_outer_step(model, optimizer, ep, config);
          break;
        }
        case StrategyKind::kTraditionalMeta: {
          const SharedEpisode ep = build_shared_episode(batch, config.tasks, rng);
          step = traditional_meta_step(model, optimizer, ep, config);
          break;
        }
        default:
          step = classical_mt_step(model, optimizer, batch, config, rng);
          break;
      }
      ++result.updates;
      if (!(step.loss <= config.divergence_threshold))
        throw NumericError("training diverged in phase " + phase + " at epoch " +
                           std::to_string(epoch) + ": loss " + std::to_string(step.loss) +
                           " exceeds " + std::to_string(config.divergence_threshold));
      for (std::size_t t = 0; t < 3; ++t)
        if (step.task_ran[t]) sums[t] += step.task_loss[t], ++counts[t];
    }

    CurveRow row;
    row.epoch = epoch;
    row.phase = phase;
    for (std::size_t t = 0; t < 3; ++t)
      if (counts[t]) row.train_loss[t] = sums[t] / counts[t];
    if (epoch % config.early_stop.eval_every == 0 || epoch == config.epochs) {
      double val = 0;
      if (validator.empty()) {
        for (std::size_t t = 0; t < 3; ++t)
          if (row.train_loss[t]) val += *row.train_loss[t];
      } else {
        val = validator.metric(model);
      }
      row.val_metric = val;
      if (stopper.record(val, epoch)) best = model;
    }
    row.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    result.curve.push_back(row);
    if (on_epoch) on_epoch(row);
    if (stopper.should_stop()) {
      result.early_stopped = true;
      result.log.push_back("phase " + phase + " early stop at epoch " + std::to_string(epoch));
      break;
    }
  }
  model = std::move(best);
  result.best_epoch = stopper.best_epoch();
  result.best_val = stopper.best_value();
  result.log.push_back("phase " + phase + " end: best epoch " + std::to_string(result.best_epoch) +
                       " val " + std::to_string(result.best_val));
}

}  // namespace

TrainResult train(const GraphDataset& dataset, const FoldSplit& fold, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (config.strategy == StrategyKind::kFineTune) return fine_tune(dataset, fold, config, on_epoch);
  TrainResult result;
  result.params = ModelParams::init(model_dims(dataset, config), config.seed);
  run_phase(result.params, dataset, fold, config, "main", result, on_epoch);
  return result;
}

TrainResult fine_tune(const GraphDataset& dataset, const FoldSplit& fold, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  config.validate();
  if (config.tasks.size() != 2) throw ArgumentError("fine_tune: exactly two fine-tuning tasks");
  TrainResult result;
  result.params = ModelParams::init(model_dims(dataset, config), config.seed);

  TrainConfig pre = config;
  pre.strategy = StrategyKind::kClassicalMultiTask;
  pre.tasks = TaskSet::all();
  run_phase(result.params, dataset, fold, pre, "pretrain", result, on_epoch);
  const int pre_best = result.best_epoch;

  TrainConfig post = config;
  post.strategy = StrategyKind::kClassicalMultiTask;
  run_phase(result.params, dataset, fold, post, "finetune", result, on_epoch);
  result.log.push_back("pretrain best epoch " + std::to_string(pre_best));
  return result;
}

}  // namespace same
