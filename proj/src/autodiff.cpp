#include "same/autodiff.hpp"

#include <cmath>
#include <string>

#include "same/errors.hpp"

namespace same {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  if (!value.allFinite()) throw NumericError("constant: non-finite input");
  nodes_.push_back({std::move(value), {}, false, -1, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(int param_id, Tensor value) {
  if (!value.allFinite())
    throw NumericError("parameter " + std::to_string(param_id) + " has non-finite entries");
  nodes_.push_back({std::move(value), {}, true, param_id, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

std::vector<Var> Tape::bind(const ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    vars.push_back(parameter(static_cast<int>(i), params.values[i]));
  return vars;
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.allFinite()) throw NumericError(std::string(op) + " produced non-finite values");
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw ArgumentError(std::string(op) + ": input from a different tape");
    needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, -1, needs ? std::move(backward) : BackwardFn{}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0 && node.value.size() != 0)
    node.grad = g;
  else
    node.grad += g;
}

GradientMap Tape::backward(Var loss, std::size_t num_params) {
  if (loss.tape != this) throw ArgumentError("backward: loss from a different tape");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ArgumentError("backward: loss must be a 1x1 scalar, got " + std::to_string(lv.rows()) +
                        "x" + std::to_string(lv.cols()));
  for (auto& n : nodes_) n.grad.resize(0, 0);

  GradientMap grads;
  grads.tensors.resize(num_params);
  if (nodes_[loss.id].requires_grad) {
    nodes_[loss.id].grad = Tensor::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, i);
    }
  }
  for (const auto& n : nodes_) {
    if (n.param_id < 0 || static_cast<std::size_t>(n.param_id) >= num_params) continue;
    Tensor& slot = grads.tensors[n.param_id];
    if (slot.size() == 0) slot = Tensor::Zero(n.value.rows(), n.value.cols());
    if (n.grad.size()) slot += n.grad;
  }
  for (const auto& g : grads.tensors)
    if (!g.allFinite()) throw NumericError("backward: non-finite gradient");
  return grads;
}

GradientMap Tape::backward(Var loss, const ParamSet& params) {
  GradientMap g = backward(loss, params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    if (g[i].size() == 0 && params.values[i].size() != 0)
      g[i] = Tensor::Zero(params.values[i].rows(), params.values[i].cols());
  return g;
}

namespace {

void check_same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ArgumentError(std::string(op) + ": operands on different tapes");
}

std::string shape(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows())
    throw ArgumentError("matmul: shape mismatch " + shape(av) + " * " + shape(bv));
  Tensor out = av * bv;
  return a.tape->record("matmul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var add(Var a, Var b) {
  check_same_tape(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("add: shape mismatch " + shape(a.value()) + " + " + shape(b.value()));
  Tensor out = a.value() + b.value();
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(b.id, t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  check_same_tape(a, row, "add_row");
  if (row.rows() != 1 || row.cols() != a.cols())
    throw ArgumentError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                        shape(row.value()));
  Tensor out = a.value().rowwise() + row.value().row(0);
  return a.tape->record("add_row", std::move(out), {a, row}, [a, row](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    if (t.requires_grad(row.id)) t.accumulate(row.id, t.grad(self).colwise().sum());
  });
}

Var scale(Var a, double s) {
  Tensor out = s * a.value();
  return a.tape->record("scale", std::move(out), {a},
                        [a, s](Tape& t, int self) { t.accumulate(a.id, s * t.grad(self)); });
}

Var hadamard(Var a, Var b) {
  check_same_tape(a, b, "hadamard");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("hadamard: shape mismatch");
  Tensor out = a.value().cwiseProduct(b.value());
  return a.tape->record("hadamard", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g.cwiseProduct(t.value(b.id)));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.cwiseProduct(t.value(a.id)));
  });
}

Var sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record("sum", std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& v = t.value(a.id);
    t.accumulate(a.id, Tensor::Constant(v.rows(), v.cols(), t.grad(self)(0, 0)));
  });
}

Var relu(Var a) {
  Tensor out = a.value().cwiseMax(0.0);
  return a.tape->record("relu", std::move(out), {a}, [a](Tape& t, int self) {
    const Tensor& x = t.value(a.id);
    t.accumulate(a.id, (x.array() > 0.0).select(t.grad(self), 0.0));
  });
}

Var row_unit_normalize(Var a, double eps) {
  const Tensor& x = a.value();
  Eigen::VectorXd norms = x.rowwise().norm();
  Tensor out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) /= (norms(i) + eps);
  return a.tape->record(
      "row_unit_normalize", std::move(out), {a}, [a, eps, norms](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(a.id);
        Tensor dx(xv.rows(), xv.cols());
        for (Eigen::Index i = 0; i < xv.rows(); ++i) {
          const double r = norms(i);
          const double s = r + eps;
          dx.row(i) = g.row(i) / s;
          if (r > 0.0) dx.row(i) -= xv.row(i) * (xv.row(i).dot(g.row(i)) / (s * s * r));
        }
        t.accumulate(a.id, dx);
      });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ArgumentError("mean_rows: zero rows");
  Tensor out = a.value().colwise().mean();
  return a.tape->record("mean_rows", std::move(out), {a}, [a](Tape& t, int self) {
    const Eigen::Index n = t.value(a.id).rows();
    Tensor g = t.grad(self).replicate(n, 1) / static_cast<double>(n);
    t.accumulate(a.id, g);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  Tape* tape = parts.front().tape;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.tape != tape) throw ArgumentError("concat_rows: inputs on different tapes");
    if (p.cols() != cols) throw ArgumentError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Tensor out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record("concat_rows", std::move(out), parts, [inputs](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Eigen::Index r0 = 0;
    for (const Var& p : inputs) {
      const Eigen::Index n = t.value(p.id).rows();
      if (t.requires_grad(p.id)) t.accumulate(p.id, g.middleRows(r0, n));
      r0 += n;
    }
  });
}

Var concat_cols(Var a, Var b) {
  check_same_tape(a, b, "concat_cols");
  if (a.rows() != b.rows()) throw ArgumentError("concat_cols: row mismatch");
  Tensor out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  return a.tape->record("concat_cols", std::move(out), {a, b}, [a, b](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Eigen::Index ca = t.value(a.id).cols();
    if (t.requires_grad(a.id)) t.accumulate(a.id, g.leftCols(ca));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.rightCols(g.cols() - ca));
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Tensor& x = a.value();
  Tensor out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows())
      throw ArgumentError("gather_rows: row index " + std::to_string(rows[i]) + " out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return a.tape->record("gather_rows", std::move(out), {a}, [a, idx](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(a.id);
    Tensor dx = Tensor::Zero(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) dx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(a.id, dx);
  });
}

Tensor log_softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Var softmax_cross_entropy(Var logits, std::span<const int> classes) {
  const Tensor& z = logits.value();
  if (static_cast<Eigen::Index>(classes.size()) != z.rows())
    throw ArgumentError("softmax_cross_entropy: " + std::to_string(classes.size()) +
                        " labels for " + std::to_string(z.rows()) + " rows");
  if (z.rows() == 0) throw ArgumentError("softmax_cross_entropy: empty batch");
  for (int c : classes)
    if (c < 0 || c >= z.cols())
      throw ArgumentError("softmax_cross_entropy: class index " + std::to_string(c) +
                          " out of range");
  Tensor logp = log_softmax_rows(z);
  double loss = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) loss -= logp(i, classes[i]);
  const double n = static_cast<double>(z.rows());
  Tensor out(1, 1);
  out(0, 0) = loss / n;
  std::vector<int> labels(classes.begin(), classes.end());
  return logits.tape->record("softmax_cross_entropy", std::move(out), {logits},
                             [logits, labels, logp, n](Tape& t, int self) {
                               Tensor d = logp.array().exp();
                               for (std::size_t i = 0; i < labels.size(); ++i)
                                 d(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
                               t.accumulate(logits.id, d * (t.grad(self)(0, 0) / n));
                             });
}

Var sigmoid_bce(Var logits, std::span<const double> targets) {
  const Tensor& z = logits.value();
  if (z.cols() != 1) throw ArgumentError("sigmoid_bce: logits must be n x 1");
  if (static_cast<Eigen::Index>(targets.size()) != z.rows())
    throw ArgumentError("sigmoid_bce: target count mismatch");
  if (z.rows() == 0) throw ArgumentError("sigmoid_bce: empty batch");
  double loss = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double x = z(i, 0), y = targets[i];
    loss += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(z.rows());
  Tensor out(1, 1);
  out(0, 0) = loss / n;
  std::vector<double> ys(targets.begin(), targets.end());
  return logits.tape->record("sigmoid_bce", std::move(out), {logits},
                             [logits, ys, n](Tape& t, int self) {
                               const Tensor& zv = t.value(logits.id);
                               Tensor d(zv.rows(), 1);
                               for (Eigen::Index i = 0; i < zv.rows(); ++i)
                                 d(i, 0) = sigmoid(zv(i, 0)) - ys[i];
                               t.accumulate(logits.id, d * (t.grad(self)(0, 0) / n));
                             });
}

}  // namespace same
