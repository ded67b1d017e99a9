#pragma once

#include <span>
#include <vector>

namespace same {

/// Fraction of matching entries.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Area under the ROC curve from the Mann-Whitney rank statistic; tied
/// scores get their mid-rank. Labels are 0/1. Throws ArgumentError when
/// either class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Mean relative change of `multi` against `baseline`, in percent:
/// 100/T * sum_i (M_m,i - M_b,i) / M_b,i.
double delta_m(std::span<const double> multi, std::span<const double> baseline);

struct MeanStd {
  double mean = 0;
  double std = 0;  // population standard deviation
  std::size_t count = 0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace same
