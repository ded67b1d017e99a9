#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "same/autodiff.hpp"
#include "same/graph.hpp"
#include "same/params.hpp"
#include "same/tasks.hpp"

namespace same {

struct ModelDims {
  int in_dim = 0;
  int hidden = 256;
  int layers = 3;
  int nc_classes = 1;
  int gc_classes = 1;
  /// Unit-normalize the output of the last layer too (inner layers always are).
  bool final_normalize = true;
};

/// Encoder (theta_GCN) and the three heads, stored as one named ParamSet.
///
/// Layout:
///   encoder.w{l}, encoder.b{l}  l = 0..layers-1, in_dim->hidden then hidden->hidden
///   nc.w, nc.b                  hidden -> nc_classes
///   gc.w1, gc.b1, gc.w2, gc.b2  hidden -> hidden -> gc_classes
///   lp.w1, lp.b1, lp.w2, lp.b2  hidden -> hidden, then 2*hidden -> 1
struct ModelParams {
  ModelDims dims;
  ParamSet params;

  /// Glorot-uniform weights, zero biases.
  static ModelParams init(const ModelDims& dims, std::uint64_t seed);

  int encoder_weight(int layer) const { return 2 * layer; }
  int encoder_bias(int layer) const { return 2 * layer + 1; }
  int id(const char* name) const;

  /// Parameters adapted for `task` (its head) plus optionally the encoder.
  std::vector<bool> task_mask(Task task, bool include_encoder) const;
  std::vector<bool> encoder_mask() const;
};

ParamGroup head_group(Task task);

/// Model parameters bound on a tape, with a per-tape encoding cache.
class BoundModel {
 public:
  /// `track` = false binds parameters as constants (inference).
  BoundModel(Tape& tape, const ModelParams& model, bool track = true);
  BoundModel(Tape& tape, const ModelDims& dims, const ParamSet& params, bool track = true);
  /// Tracks only parameters whose `track` bit is set; the rest are constants.
  BoundModel(Tape& tape, const ModelDims& dims, const ParamSet& params,
             const std::vector<bool>& track);

  Tape& tape() const { return *tape_; }
  const ModelDims& dims() const { return dims_; }
  Var param(int id) const { return vars_[id]; }
  Var param(const char* name) const;

  /// Node embeddings (n x hidden). Cached by graph address.
  Var encode(const Graph& graph);

  Var nc_logits(Var embeddings) const;
  Var gc_logits(Var embeddings) const;  // 1 x gc_classes
  Var lp_logits(Var embeddings, std::span<const Edge> pairs) const;  // P x 1

  /// Mean cross-entropy over the labelled nodes of every instance.
  Var nc_loss(std::span<const NCInstance> instances);
  /// Mean cross-entropy over graphs.
  Var gc_loss(std::span<const Graph* const> graphs);
  /// Mean BCE over all positive (target 1) and negative (target 0) pairs.
  Var lp_loss(std::span<const LPInstance> instances);

 private:
  Tape* tape_;
  ModelDims dims_;
  const ParamSet* params_;
  std::vector<Var> vars_;
  std::map<const Graph*, Var> cache_;
};

/// Inference helpers (no gradient tracking).
Tensor encode_graph(const ModelParams& model, const Graph& graph);
/// Class log-probabilities per node.
Tensor nc_forward(const ModelParams& model, const Tensor& embeddings);
/// Class log-probabilities for the graph (1 x C).
Tensor gc_forward(const ModelParams& model, const Tensor& embeddings);
/// Link probabilities in (0, 1) for each pair.
std::vector<double> lp_forward(const ModelParams& model, const Tensor& embeddings,
                               std::span<const Edge> pairs);

}  // namespace same
