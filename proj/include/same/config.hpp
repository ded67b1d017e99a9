#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "same/evaluation.hpp"
#include "same/training.hpp"
#include "same/tudataset.hpp"

namespace same {

/// Everything a CLI run needs.
///
/// Text form, one `key = value` per line under `[data]`, `[train]`, `[eval]`
/// and `[run]` sections; `#` starts a comment:
///
///   [data]
///   dataset = ENZYMES
///   folds = 10
///   [train]
///   strategy = esame
///   tasks = gc,nc
struct RunConfig {
  // [data]
  std::string dataset;  // directory, name under the data root, or synthetic[:N]
  FeatureSource features = FeatureSource::kAttributes;
  int folds = 10;
  std::vector<int> fold_ids;  // empty = every fold
  bool stratify = true;
  // [train]
  TrainConfig train;
  // [eval]
  EvalOptions eval;
  TaskSet eval_tasks;  // empty = the trained tasks
  // [run]
  std::filesystem::path out = "results";
  int workers = 0;  // 0 = available cores

  void validate() const;
};

/// Applies one setting. Throws ArgumentError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& section, const std::string& key,
                   const std::string& value);

/// Reads a config file on top of `base`. Throws FormatError when the file
/// cannot be opened and ParseError for malformed lines.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>",
                       RunConfig base = {});

/// Canonical text form; parse_config(config_snapshot(c)) reproduces c.
std::string config_snapshot(const RunConfig& config);

/// 16 hex digits identifying the settings that influence results (the
/// output directory and worker count are excluded).
std::string config_hash(const RunConfig& config);

/// Folds selected by `config.fold_ids` (all when empty).
std::vector<int> selected_folds(const RunConfig& config);

}  // namespace same
