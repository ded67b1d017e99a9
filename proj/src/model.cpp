#include "same/model.hpp"

#include <cmath>
#include <random>

#include "same/errors.hpp"

namespace same {
namespace {

Tensor glorot(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

}  // namespace

ParamGroup head_group(Task task) {
  switch (task) {
    case Task::kGC: return ParamGroup::kGraphHead;
    case Task::kNC: return ParamGroup::kNodeHead;
    case Task::kLP: return ParamGroup::kLinkHead;
  }
  return ParamGroup::kEncoder;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.in_dim < 1 || dims.hidden < 1 || dims.layers < 1 || dims.nc_classes < 1 ||
      dims.gc_classes < 1)
    throw ArgumentError("ModelParams::init: all dimensions must be positive");
  std::mt19937_64 rng(seed);
  ModelParams m;
  m.dims = dims;
  ParamSet& p = m.params;
  const int h = dims.hidden;
  for (int l = 0; l < dims.layers; ++l) {
    const int in = l == 0 ? dims.in_dim : h;
    p.add("encoder.w" + std::to_string(l), ParamGroup::kEncoder, glorot(in, h, rng));
    p.add("encoder.b" + std::to_string(l), ParamGroup::kEncoder, Tensor::Zero(1, h));
  }
  p.add("nc.w", ParamGroup::kNodeHead, glorot(h, dims.nc_classes, rng));
  p.add("nc.b", ParamGroup::kNodeHead, Tensor::Zero(1, dims.nc_classes));
  p.add("gc.w1", ParamGroup::kGraphHead, glorot(h, h, rng));
  p.add("gc.b1", ParamGroup::kGraphHead, Tensor::Zero(1, h));
  p.add("gc.w2", ParamGroup::kGraphHead, glorot(h, dims.gc_classes, rng));
  p.add("gc.b2", ParamGroup::kGraphHead, Tensor::Zero(1, dims.gc_classes));
  p.add("lp.w1", ParamGroup::kLinkHead, glorot(h, h, rng));
  p.add("lp.b1", ParamGroup::kLinkHead, Tensor::Zero(1, h));
  p.add("lp.w2", ParamGroup::kLinkHead, glorot(2 * h, 1, rng));
  p.add("lp.b2", ParamGroup::kLinkHead, Tensor::Zero(1, 1));
  return m;
}

int ModelParams::id(const char* name) const {
  const int i = params.index_of(name);
  if (i < 0) throw ArgumentError(std::string("unknown parameter ") + name);
  return i;
}

std::vector<bool> ModelParams::task_mask(Task task, bool include_encoder) const {
  if (include_encoder) return group_mask(params, {ParamGroup::kEncoder, head_group(task)});
  return group_mask(params, {head_group(task)});
}

std::vector<bool> ModelParams::encoder_mask() const {
  return group_mask(params, {ParamGroup::kEncoder});
}

BoundModel::BoundModel(Tape& tape, const ModelParams& model, bool track)
    : BoundModel(tape, model.dims, model.params, track) {}

BoundModel::BoundModel(Tape& tape, const ModelDims& dims, const ParamSet& params, bool track)
    : tape_(&tape), dims_(dims), params_(&params) {
  if (track) {
    vars_ = tape.bind(params);
  } else {
    vars_.reserve(params.size());
    for (const auto& v : params.values) vars_.push_back(tape.constant(v));
  }
}

BoundModel::BoundModel(Tape& tape, const ModelDims& dims, const ParamSet& params,
                       const std::vector<bool>& track)
    : tape_(&tape), dims_(dims), params_(&params) {
  if (track.size() != params.size()) throw ArgumentError("BoundModel: track mask size mismatch");
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    vars_.push_back(track[i] ? tape.parameter(static_cast<int>(i), params.values[i])
                             : tape.constant(params.values[i]));
}

Var BoundModel::param(const char* name) const {
  const int i = params_->index_of(name);
  if (i < 0) throw ArgumentError(std::string("unknown parameter ") + name);
  return vars_[i];
}

Var BoundModel::encode(const Graph& graph) {
  if (auto it = cache_.find(&graph); it != cache_.end()) return it->second;
  if (graph.feature_dim() != dims_.in_dim)
    throw ArgumentError("encode: graph feature dim " + std::to_string(graph.feature_dim()) +
                        " != encoder input dim " + std::to_string(dims_.in_dim));
  if (graph.num_nodes == 0) throw ArgumentError("encode: graph has no nodes");
  Tape& t = *tape_;
  Var adj = t.constant(normalized_adjacency(graph));
  Var h = t.constant(graph.node_features);
  for (int l = 0; l < dims_.layers; ++l) {
    Var w = vars_[2 * l];
    Var b = vars_[2 * l + 1];
    const Eigen::Index n = h.rows(), din = h.cols(), dout = w.cols();
    // Same product either way; pick the cheaper association.
    Var z = n * din <= n * dout ? matmul(matmul(adj, h), w) : matmul(adj, matmul(h, w));
    Var out = relu(add_row(z, b));
    if (din == dout) out = add(out, h);
    if (l + 1 < dims_.layers || dims_.final_normalize) out = row_unit_normalize(out);
    h = out;
  }
  cache_.emplace(&graph, h);
  return h;
}

Var BoundModel::nc_logits(Var embeddings) const {
  return add_row(matmul(embeddings, param("nc.w")), param("nc.b"));
}

Var BoundModel::gc_logits(Var embeddings) const {
  if (embeddings.rows() == 0) throw ArgumentError("gc_logits: zero-node graph");
  Var z = relu(add_row(matmul(embeddings, param("gc.w1")), param("gc.b1")));
  return add_row(matmul(mean_rows(z), param("gc.w2")), param("gc.b2"));
}

Var BoundModel::lp_logits(Var embeddings, std::span<const Edge> pairs) const {
  const auto n = static_cast<int>(embeddings.rows());
  std::vector<int> us, vs;
  us.reserve(pairs.size());
  vs.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw ArgumentError("lp_logits: pair (" + std::to_string(u) + ", " + std::to_string(v) +
                          ") out of range for " + std::to_string(n) + " nodes");
    us.push_back(u);
    vs.push_back(v);
  }
  Var z = relu(add_row(matmul(embeddings, param("lp.w1")), param("lp.b1")));
  Var pair_features = concat_cols(gather_rows(z, us), gather_rows(z, vs));
  return add_row(matmul(pair_features, param("lp.w2")), param("lp.b2"));
}

Var BoundModel::nc_loss(std::span<const NCInstance> instances) {
  std::vector<Var> logits;
  std::vector<int> labels;
  for (const auto& inst : instances) {
    if (inst.labelled_nodes.empty()) continue;
    if (!inst.graph->has_node_labels()) throw ArgumentError("nc_loss: graph has no node labels");
    Var all = nc_logits(encode(*inst.graph));
    logits.push_back(gather_rows(all, inst.labelled_nodes));
    for (int v : inst.labelled_nodes) labels.push_back(inst.graph->node_labels.at(v));
  }
  if (logits.empty()) throw ArgumentError("nc_loss: empty labelled node set");
  return softmax_cross_entropy(logits.size() == 1 ? logits[0] : concat_rows(logits), labels);
}

Var BoundModel::gc_loss(std::span<const Graph* const> graphs) {
  if (graphs.empty()) throw ArgumentError("gc_loss: no graphs");
  std::vector<Var> logits;
  std::vector<int> labels;
  for (const Graph* g : graphs) {
    if (!g->graph_label) throw ArgumentError("gc_loss: graph has no label");
    logits.push_back(gc_logits(encode(*g)));
    labels.push_back(*g->graph_label);
  }
  return softmax_cross_entropy(logits.size() == 1 ? logits[0] : concat_rows(logits), labels);
}

Var BoundModel::lp_loss(std::span<const LPInstance> instances) {
  std::vector<Var> logits;
  std::vector<double> targets;
  for (const auto& inst : instances) {
    std::vector<Edge> pairs = inst.positive_edges;
    pairs.insert(pairs.end(), inst.negative_edges.begin(), inst.negative_edges.end());
    if (pairs.empty()) continue;
    logits.push_back(lp_logits(encode(inst.graph), pairs));
    targets.insert(targets.end(), inst.positive_edges.size(), 1.0);
    targets.insert(targets.end(), inst.negative_edges.size(), 0.0);
  }
  if (logits.empty()) throw ArgumentError("lp_loss: no scored pairs");
  return sigmoid_bce(logits.size() == 1 ? logits[0] : concat_rows(logits), targets);
}

Tensor encode_graph(const ModelParams& model, const Graph& graph) {
  Tape tape;
  BoundModel bound(tape, model, false);
  return bound.encode(graph).value();
}

Tensor nc_forward(const ModelParams& model, const Tensor& embeddings) {
  Tape tape;
  BoundModel bound(tape, model, false);
  return log_softmax_rows(bound.nc_logits(tape.constant(embeddings)).value());
}

Tensor gc_forward(const ModelParams& model, const Tensor& embeddings) {
  Tape tape;
  BoundModel bound(tape, model, false);
  return log_softmax_rows(bound.gc_logits(tape.constant(embeddings)).value());
}

std::vector<double> lp_forward(const ModelParams& model, const Tensor& embeddings,
                               std::span<const Edge> pairs) {
  Tape tape;
  BoundModel bound(tape, model, false);
  const Tensor& z = bound.lp_logits(tape.constant(embeddings), pairs).value();
  std::vector<double> probs(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) probs[i] = sigmoid(z(static_cast<Eigen::Index>(i), 0));
  return probs;
}

}  // namespace same
