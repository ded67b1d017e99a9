#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "same/params.hpp"
#include "same/tensor.hpp"

namespace same {

struct ProbeConfig {
  double l2 = 1e-3;
  int max_iterations = 500;
  double grad_tolerance = 1e-5;
  int history = 10;  // L-BFGS memory
};

/// Linear classifier on frozen features: L2-regularized logistic
/// regression (one sigmoid output for two classes, softmax otherwise)
/// trained full-batch with L-BFGS from zero weights.
struct LinearClassifier {
  Tensor weights;  // d x 1 (binary) or d x C
  Tensor bias;     // 1 x 1 or 1 x C
  int num_classes = 0;
  /// Training labels had a single class; predicts `constant_class`.
  bool degenerate = false;
  int constant_class = 0;
  int iterations = 0;
  double grad_norm = 0;
  const char* trained_by = "l2-logistic-regression/lbfgs";

  bool binary() const { return num_classes == 2; }
  std::vector<int> predict(const Tensor& features) const;
  /// Probability of class 1 (binary classifiers only).
  std::vector<double> positive_scores(const Tensor& features) const;
};

LinearClassifier train_linear_probe(const Tensor& features, std::span<const int> labels,
                                    int num_classes, const ProbeConfig& config = {});

struct MlpProbeConfig {
  int hidden = 256;
  double lr = 1e-3;
  int max_epochs = 500;
  int patience = 25;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// One-hidden-layer ReLU network trained with Adam, early-stopped on a
/// held-out fraction of the training rows.
struct MlpClassifier {
  ParamSet params;  // w1, b1, w2, b2
  int num_classes = 0;
  bool degenerate = false;
  int constant_class = 0;
  int epochs_run = 0;

  bool binary() const { return num_classes == 2; }
  std::vector<int> predict(const Tensor& features) const;
  std::vector<double> positive_scores(const Tensor& features) const;
};

MlpClassifier train_mlp_probe(const Tensor& features, std::span<const int> labels, int num_classes,
                              const MlpProbeConfig& config = {});

}  // namespace same
