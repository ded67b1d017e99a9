#include "same/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "same/errors.hpp"

namespace same {

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ArgumentError("accuracy: length mismatch");
  if (labels.empty()) throw ArgumentError("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) positive_rank_sum += midrank, ++positives;
    i = j;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0)
    throw ArgumentError("roc_auc: needs at least one positive and one negative");
  const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

double delta_m(std::span<const double> multi, std::span<const double> baseline) {
  if (multi.size() != baseline.size() || multi.empty())
    throw ArgumentError("delta_m: metric lists must be nonempty and of equal length");
  double sum = 0;
  for (std::size_t i = 0; i < multi.size(); ++i) {
    if (!(baseline[i] > 0)) throw ArgumentError("delta_m: baseline metrics must be > 0");
    sum += (multi[i] - baseline[i]) / baseline[i];
  }
  return 100.0 * sum / static_cast<double>(multi.size());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

}  // namespace same
