#pragma once

#include <functional>
#include <span>
#include <vector>

#include "same/params.hpp"
#include "same/tensor.hpp"

namespace same {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is always topologically sorted; backward walks it once in reverse.
///
/// A tape is single-threaded. Every recorded value is checked for NaN/Inf.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Var constant(Tensor value);
  /// Leaf bound to parameter `param_id`; its gradient lands in the GradientMap.
  Var parameter(int param_id, Tensor value);
  /// Binds every tensor of `params` as a parameter leaf.
  std::vector<Var> bind(const ParamSet& params);

  /// Records an op output. `inputs` decide whether the node needs a gradient.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Adds `g` to the gradient of node `id` (no-op for constants).
  void accumulate(int id, const Tensor& g);

  /// d loss / d parameter for ids 0..num_params-1. Parameters not reached
  /// by the loss get zero tensors shaped like the bound value, or 0x0 when
  /// the parameter was never bound.
  GradientMap backward(Var loss, std::size_t num_params);
  /// Convenience: gradient shaped like `params`.
  GradientMap backward(Var loss, const ParamSet& params);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    int param_id = -1;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Primitives. All losses are means over examples.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// a (n x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var sum(Var a);
Var relu(Var a);
/// Each row divided by (its L2 norm + eps).
Var row_unit_normalize(Var a, double eps = 1e-12);
Var mean_rows(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var gather_rows(Var a, std::span<const int> rows);
/// Mean cross-entropy of softmax(logits) against class indices.
Var softmax_cross_entropy(Var logits, std::span<const int> classes);
/// Mean binary cross-entropy of sigmoid(logits) (n x 1) against {0,1} targets.
Var sigmoid_bce(Var logits, std::span<const double> targets);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Plain tensor helpers shared by inference paths.
Tensor log_softmax_rows(const Tensor& logits);
double sigmoid(double z);

}  // namespace same
