#include "same/probe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <set>

#include "same/autodiff.hpp"
#include "same/errors.hpp"
#include "same/training.hpp"

namespace same {
namespace {

using Vec = Eigen::VectorXd;

struct LogisticObjective {
  const Tensor& x;
  std::span<const int> y;
  int outputs;  // 1 for binary, C otherwise
  double l2;

  Eigen::Index dim() const { return x.cols() * outputs + outputs; }

  void unpack(const Vec& theta, Tensor& w, Tensor& b) const {
    w = Eigen::Map<const Tensor>(theta.data(), x.cols(), outputs);
    b = Eigen::Map<const Tensor>(theta.data() + x.cols() * outputs, 1, outputs);
  }

  double operator()(const Vec& theta, Vec& grad) const {
    Tensor w, b;
    unpack(theta, w, b);
    Tensor z = (x * w).rowwise() + b.row(0);
    const double n = static_cast<double>(x.rows());
    Tensor g(z.rows(), z.cols());
    double loss = 0;
    if (outputs == 1) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double zi = z(i, 0), yi = y[i];
        loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
        g(i, 0) = sigmoid(zi) - yi;
      }
    } else {
      Tensor logp = log_softmax_rows(z);
      g = logp.array().exp();
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        loss -= logp(i, y[i]);
        g(i, y[i]) -= 1.0;
      }
    }
    g /= n;
    loss = loss / n + 0.5 * l2 * w.squaredNorm();
    Tensor gw = x.transpose() * g + l2 * w;
    Tensor gb = g.colwise().sum();
    grad.resize(dim());
    Eigen::Map<Tensor>(grad.data(), x.cols(), outputs) = gw;
    Eigen::Map<Tensor>(grad.data() + x.cols() * outputs, 1, outputs) = gb;
    return loss;
  }
};

// Limited-memory BFGS with Armijo backtracking.
Vec minimize_lbfgs(const LogisticObjective& f, int max_iter, double tol, int history,
                   int& iterations, double& final_grad_norm) {
  Vec x = Vec::Zero(f.dim()), g;
  double fx = f(x, g);
  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  iterations = 0;
  for (; iterations < max_iter && g.norm() >= tol; ++iterations) {
    Vec q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0 / std::max(1.0, g.norm());
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Vec d = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += s_hist[i] * (alpha[i] - beta);
    }
    d = -d;
    double slope = g.dot(d);
    if (!(slope < 0)) {
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      d = -g / std::max(1.0, g.norm());
      slope = g.dot(d);
    }
    double step = 1.0;
    Vec x_new, g_new;
    double f_new = 0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Vec s = x_new - x, yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      s_hist.push_back(s), y_hist.push_back(yv), rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > history)
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
    }
    x = std::move(x_new), g = std::move(g_new), fx = f_new;
  }
  final_grad_norm = g.norm();
  return x;
}

void check_labels(const Tensor& features, std::span<const int> labels, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw ArgumentError("probe: label count does not match feature rows");
  if (labels.empty()) throw ArgumentError("probe: no training rows");
  if (num_classes < 1) throw ArgumentError("probe: num_classes must be >= 1");
  for (int l : labels)
    if (l < 0 || l >= num_classes) throw ArgumentError("probe: label out of range");
}

std::optional<int> single_class(std::span<const int> labels) {
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() == 1) return *distinct.begin();
  return std::nullopt;
}

}  // namespace

LinearClassifier train_linear_probe(const Tensor& features, std::span<const int> labels,
                                    int num_classes, const ProbeConfig& config) {
  check_labels(features, labels, num_classes);
  LinearClassifier clf;
  clf.num_classes = num_classes;
  if (auto only = single_class(labels)) {
    clf.degenerate = true;
    clf.constant_class = *only;
    return clf;
  }
  const int outputs = num_classes == 2 ? 1 : num_classes;
  LogisticObjective f{features, labels, outputs, config.l2};
  Vec theta = minimize_lbfgs(f, config.max_iterations, config.grad_tolerance, config.history,
                             clf.iterations, clf.grad_norm);
  f.unpack(theta, clf.weights, clf.bias);
  return clf;
}

std::vector<int> LinearClassifier::predict(const Tensor& features) const {
  std::vector<int> out(static_cast<std::size_t>(features.rows()), constant_class);
  if (degenerate) return out;
  Tensor z = (features * weights).rowwise() + bias.row(0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (binary()) {
      out[i] = z(i, 0) > 0 ? 1 : 0;
    } else {
      Eigen::Index arg = 0;
      z.row(i).maxCoeff(&arg);
      out[i] = static_cast<int>(arg);
    }
  }
  return out;
}

std::vector<double> LinearClassifier::positive_scores(const Tensor& features) const {
  if (num_classes != 2) throw ArgumentError("positive_scores: binary classifiers only");
  std::vector<double> out(static_cast<std::size_t>(features.rows()), constant_class == 1 ? 1.0 : 0.0);
  if (degenerate) return out;
  Tensor z = (features * weights).rowwise() + bias.row(0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) out[i] = sigmoid(z(i, 0));
  return out;
}

namespace {

Var mlp_logits(Tape& tape, const std::vector<Var>& p, const Tensor& x) {
  Var h = relu(add_row(matmul(tape.constant(x), p[0]), p[1]));
  return add_row(matmul(h, p[2]), p[3]);
}

Var mlp_loss(Var logits, std::span<const int> y, bool binary) {
  if (binary) {
    std::vector<double> t(y.begin(), y.end());
    return sigmoid_bce(logits, t);
  }
  return softmax_cross_entropy(logits, y);
}

Tensor rows_of(const Tensor& x, const std::vector<int>& ids) {
  Tensor out(static_cast<Eigen::Index>(ids.size()), x.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(ids[i]);
  return out;
}

Tensor mlp_forward(const ParamSet& params, const Tensor& x) {
  Tape tape;
  std::vector<Var> p;
  for (const auto& v : params.values) p.push_back(tape.constant(v));
  return mlp_logits(tape, p, x).value();
}

}  // namespace

MlpClassifier train_mlp_probe(const Tensor& features, std::span<const int> labels, int num_classes,
                              const MlpProbeConfig& config) {
  check_labels(features, labels, num_classes);
  MlpClassifier clf;
  clf.num_classes = num_classes;
  if (auto only = single_class(labels)) {
    clf.degenerate = true;
    clf.constant_class = *only;
    return clf;
  }
  const int outputs = num_classes == 2 ? 1 : num_classes;
  const auto d = static_cast<int>(features.cols());
  std::mt19937_64 rng(config.seed);
  auto glorot = [&](int in, int out) {
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
  };
  // Group tags are irrelevant for a standalone probe.
  clf.params.add("w1", ParamGroup::kEncoder, glorot(d, config.hidden));
  clf.params.add("b1", ParamGroup::kEncoder, Tensor::Zero(1, config.hidden));
  clf.params.add("w2", ParamGroup::kEncoder, glorot(config.hidden, outputs));
  clf.params.add("b2", ParamGroup::kEncoder, Tensor::Zero(1, outputs));

  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(config.val_fraction * static_cast<double>(order.size()));
  if (order.size() - n_val < 1) n_val = 0;
  std::vector<int> val_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<int> train_ids(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  const Tensor x_train = rows_of(features, train_ids);
  const Tensor x_val = rows_of(features, val_ids);
  std::vector<int> y_train, y_val;
  for (int i : train_ids) y_train.push_back(labels[i]);
  for (int i : val_ids) y_val.push_back(labels[i]);

  Adam adam(clf.params, AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  EarlyStopping stopper(config.patience);
  ParamSet best = clf.params;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Tape tape;
    std::vector<Var> p = tape.bind(clf.params);
    Var loss = mlp_loss(mlp_logits(tape, p, x_train), y_train, outputs == 1);
    GradientMap g = tape.backward(loss, clf.params);
    adam.step(clf.params, g);
    clf.epochs_run = epoch;

    double val_loss = loss.value()(0, 0);
    if (!val_ids.empty()) {
      Tape vt;
      std::vector<Var> vp;
      for (const auto& v : clf.params.values) vp.push_back(vt.constant(v));
      val_loss = mlp_loss(mlp_logits(vt, vp, x_val), y_val, outputs == 1).value()(0, 0);
    }
    if (stopper.record(val_loss, epoch)) best = clf.params;
    if (stopper.should_stop()) break;
  }
  clf.params = std::move(best);
  return clf;
}

std::vector<int> MlpClassifier::predict(const Tensor& features) const {
  std::vector<int> out(static_cast<std::size_t>(features.rows()), constant_class);
  if (degenerate) return out;
  Tensor z = mlp_forward(params, features);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (binary()) {
      out[i] = z(i, 0) > 0 ? 1 : 0;
    } else {
      Eigen::Index arg = 0;
      z.row(i).maxCoeff(&arg);
      out[i] = static_cast<int>(arg);
    }
  }
  return out;
}

std::vector<double> MlpClassifier::positive_scores(const Tensor& features) const {
  if (num_classes != 2) throw ArgumentError("positive_scores: binary classifiers only");
  std::vector<double> out(static_cast<std::size_t>(features.rows()), constant_class == 1 ? 1.0 : 0.0);
  if (degenerate) return out;
  Tensor z = mlp_forward(params, features);
  for (Eigen::Index i = 0; i < z.rows(); ++i) out[i] = sigmoid(z(i, 0));
  return out;
}

}  // namespace same
