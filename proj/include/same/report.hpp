#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "same/evaluation.hpp"
#include "same/training.hpp"

namespace same {

/// Metric rows as CSV. Columns: experiment, dataset, strategy,
/// trained_tasks, eval_task, method, fold, metric, value, seed, config_hash.
/// Values are printed with %.17g so a read-back is exact.
std::string metrics_csv(const std::vector<MetricRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text, const std::string& origin);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);
/// Every metrics.csv below `dir`, in path order.
std::vector<MetricRow> collect_metrics(const std::filesystem::path& dir);

void write_metrics_json(const std::filesystem::path& path, const std::vector<MetricRow>& rows,
                        const std::string& config_snapshot);

/// Training curve: epoch, phase, train_loss_{gc,nc,lp}, val_metric, wall_time.
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& curve,
                     const std::string& config_hash, std::uint64_t seed);

/// Mean and population std over folds of one (experiment, dataset,
/// strategy, trained tasks, eval task, method) group.
struct AggregateRow {
  std::string experiment, dataset, strategy, trained_tasks, eval_task, method, metric;
  double mean = 0, std = 0;
  std::size_t folds = 0;
};
std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows);

/// Delta_m of one trained model family against the classical single-task
/// baselines of its tasks. The per-fold values use the baseline means.
struct DeltaRow {
  std::string dataset, strategy, trained_tasks, method;
  std::vector<double> multi;     // mean metric per trained task, GC/NC/LP order
  std::vector<double> baseline;  // classical-st mean per trained task
  double delta = 0;              // delta_m(multi, baseline)
  double fold_mean = 0, fold_std = 0;
  std::size_t folds = 0;
};
std::vector<DeltaRow> delta_table(const std::vector<MetricRow>& rows);

/// Transfer drop of x -> y against y -> y for single-task sources.
struct DropRow {
  std::string dataset, strategy, method, source, target;
  double value = 0, reference = 0, drop = 0;  // drop in percent of the reference
};
std::vector<DropRow> drop_matrix(const std::vector<MetricRow>& rows);

/// Q1-Q4 summaries as plain text, numbers as "mean ± std" with one decimal.
std::string render_tables(const std::vector<MetricRow>& rows);

/// summary.csv, delta_m.csv, fig1_drop.csv, tables.txt and report.json in `out`.
void write_report(const std::filesystem::path& out, const std::vector<MetricRow>& rows);

}  // namespace same
