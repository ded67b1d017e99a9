#include "same/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "same/checkpoint.hpp"
#include "same/errors.hpp"

namespace same {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ArgumentError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ArgumentError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ArgumentError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(static_cast<int>(to_int(key, tok)));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (dataset.empty()) throw ArgumentError("no dataset given");
  if (folds < 2) throw ArgumentError("folds must be >= 2");
  for (int f : fold_ids)
    if (f < 0 || f >= folds) throw ArgumentError("fold id " + std::to_string(f) + " out of range");
  if (workers < 0) throw ArgumentError("workers must be >= 0");
}

void apply_setting(RunConfig& c, const std::string& section, const std::string& key,
                   const std::string& value) {
  const std::string k = section + "." + key;
  TrainConfig& t = c.train;
  if (k == "data.dataset") c.dataset = value;
  else if (k == "data.features") {
    if (value == "attributes") c.features = FeatureSource::kAttributes;
    else if (value == "attributes+labels") c.features = FeatureSource::kAttributesAndLabels;
    else throw ArgumentError(k + ": expected attributes or attributes+labels");
  }
  else if (k == "data.folds") c.folds = static_cast<int>(to_int(k, value));
  else if (k == "data.fold_ids") c.fold_ids = to_int_list(k, value);
  else if (k == "data.stratify") c.stratify = to_bool(k, value);
  else if (k == "train.strategy") {
    auto s = parse_strategy(value);
    if (!s) throw ArgumentError(k + ": unknown strategy '" + value + "'");
    t.strategy = *s;
  }
  else if (k == "train.tasks") t.tasks = TaskSet::parse(value);
  else if (k == "train.inner_lr") t.inner_lr = to_double(k, value);
  else if (k == "train.inner_steps") t.inner_steps = static_cast<int>(to_int(k, value));
  else if (k == "train.outer_lr") t.outer.lr = to_double(k, value);
  else if (k == "train.beta1") t.outer.beta1 = to_double(k, value);
  else if (k == "train.beta2") t.outer.beta2 = to_double(k, value);
  else if (k == "train.adam_eps") t.outer.eps = to_double(k, value);
  else if (k == "train.epochs") t.epochs = static_cast<int>(to_int(k, value));
  else if (k == "train.batch_size") t.batch_size = static_cast<int>(to_int(k, value));
  else if (k == "train.weight_gc") t.weights.gc = to_double(k, value);
  else if (k == "train.weight_nc") t.weights.nc = to_double(k, value);
  else if (k == "train.weight_lp") t.weights.lp = to_double(k, value);
  else if (k == "train.meta_grad") {
    if (value == "fo") t.meta_gradient = MetaGradientMode::kFirstOrder;
    else if (value == "so") t.meta_gradient = MetaGradientMode::kSecondOrder;
    else throw ArgumentError(k + ": expected fo or so");
  }
  else if (k == "train.patience") t.early_stop.patience = static_cast<int>(to_int(k, value));
  else if (k == "train.eval_every") t.early_stop.eval_every = static_cast<int>(to_int(k, value));
  else if (k == "train.seed") t.seed = to_u64(k, value);
  else if (k == "train.hidden") t.hidden = static_cast<int>(to_int(k, value));
  else if (k == "train.layers") t.layers = static_cast<int>(to_int(k, value));
  else if (k == "train.final_normalize") t.final_normalize = to_bool(k, value);
  else if (k == "train.divergence_threshold") t.divergence_threshold = to_double(k, value);
  else if (k == "eval.method") {
    auto m = parse_eval_method(value);
    if (!m) throw ArgumentError(k + ": expected auto, heads, linear or mlp");
    c.eval.method = *m;
  }
  else if (k == "eval.tasks") c.eval_tasks = value.empty() ? TaskSet{} : TaskSet::parse(value);
  else if (k == "eval.l2") c.eval.linear.l2 = to_double(k, value);
  else if (k == "eval.max_iterations") c.eval.linear.max_iterations = static_cast<int>(to_int(k, value));
  else if (k == "eval.grad_tolerance") c.eval.linear.grad_tolerance = to_double(k, value);
  else if (k == "eval.mlp_hidden") c.eval.mlp.hidden = static_cast<int>(to_int(k, value));
  else if (k == "eval.mlp_lr") c.eval.mlp.lr = to_double(k, value);
  else if (k == "eval.mlp_epochs") c.eval.mlp.max_epochs = static_cast<int>(to_int(k, value));
  else if (k == "eval.mlp_patience") c.eval.mlp.patience = static_cast<int>(to_int(k, value));
  else if (k == "eval.mlp_val_fraction") c.eval.mlp.val_fraction = to_double(k, value);
  else if (k == "eval.seed") c.eval.seed = to_u64(k, value);
  else if (k == "run.out") c.out = value;
  else if (k == "run.workers") c.workers = static_cast<int>(to_int(k, value));
  else throw ArgumentError("unknown setting '" + k + "'");
}

RunConfig parse_config(const std::string& text, const std::string& origin, RunConfig base) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(origin, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin, lineno, "expected key = value");
    if (section.empty()) throw ParseError(origin, lineno, "setting outside a section");
    try {
      apply_setting(base, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ArgumentError& e) {
      throw ParseError(origin, lineno, e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), std::move(base));
}

namespace {

std::string result_settings(const RunConfig& c) {
  const TrainConfig& t = c.train;
  std::ostringstream o;
  std::string ids;
  for (int f : c.fold_ids) ids += (ids.empty() ? "" : ",") + std::to_string(f);
  o << "[data]\n"
    << "dataset = " << c.dataset << "\n"
    << "features = "
    << (c.features == FeatureSource::kAttributes ? "attributes" : "attributes+labels") << "\n"
    << "folds = " << c.folds << "\n"
    << "fold_ids = " << ids << "\n"
    << "stratify = " << (c.stratify ? "true" : "false") << "\n"
    << "[train]\n"
    << "strategy = " << to_string(t.strategy) << "\n"
    << "tasks = " << t.tasks.label() << "\n"
    << "inner_lr = " << fmt(t.inner_lr) << "\n"
    << "inner_steps = " << t.inner_steps << "\n"
    << "outer_lr = " << fmt(t.outer.lr) << "\n"
    << "beta1 = " << fmt(t.outer.beta1) << "\n"
    << "beta2 = " << fmt(t.outer.beta2) << "\n"
    << "adam_eps = " << fmt(t.outer.eps) << "\n"
    << "epochs = " << t.epochs << "\n"
    << "batch_size = " << t.batch_size << "\n"
    << "weight_gc = " << fmt(t.weights.gc) << "\n"
    << "weight_nc = " << fmt(t.weights.nc) << "\n"
    << "weight_lp = " << fmt(t.weights.lp) << "\n"
    << "meta_grad = " << (t.meta_gradient == MetaGradientMode::kFirstOrder ? "fo" : "so") << "\n"
    << "patience = " << t.early_stop.patience << "\n"
    << "eval_every = " << t.early_stop.eval_every << "\n"
    << "seed = " << t.seed << "\n"
    << "hidden = " << t.hidden << "\n"
    << "layers = " << t.layers << "\n"
    << "final_normalize = " << (t.final_normalize ? "true" : "false") << "\n"
    << "divergence_threshold = " << fmt(t.divergence_threshold) << "\n"
    << "[eval]\n"
    << "method = " << to_string(c.eval.method) << "\n"
    << "tasks = " << c.eval_tasks.label() << "\n"
    << "l2 = " << fmt(c.eval.linear.l2) << "\n"
    << "max_iterations = " << c.eval.linear.max_iterations << "\n"
    << "grad_tolerance = " << fmt(c.eval.linear.grad_tolerance) << "\n"
    << "mlp_hidden = " << c.eval.mlp.hidden << "\n"
    << "mlp_lr = " << fmt(c.eval.mlp.lr) << "\n"
    << "mlp_epochs = " << c.eval.mlp.max_epochs << "\n"
    << "mlp_patience = " << c.eval.mlp.patience << "\n"
    << "mlp_val_fraction = " << fmt(c.eval.mlp.val_fraction) << "\n"
    << "seed = " << c.eval.seed << "\n";
  return o.str();
}

}  // namespace

std::string config_snapshot(const RunConfig& c) {
  std::ostringstream o;
  o << result_settings(c) << "[run]\n"
    << "out = " << c.out.string() << "\n"
    << "workers = " << c.workers << "\n";
  return o.str();
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(result_settings(c))));
  return buf;
}

std::vector<int> selected_folds(const RunConfig& c) {
  if (!c.fold_ids.empty()) return c.fold_ids;
  std::vector<int> all;
  for (int f = 0; f < c.folds; ++f) all.push_back(f);
  return all;
}

}  // namespace same
