#include "same/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "same/errors.hpp"
#include "same/metrics.hpp"

namespace same {
namespace {

constexpr const char* kHeader =
    "experiment,dataset,strategy,trained_tasks,eval_task,method,fold,metric,value,seed,config_hash";

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int task_order(const std::string& t) { return t == "gc" ? 0 : t == "nc" ? 1 : t == "lp" ? 2 : 3; }

std::vector<std::string> task_list(const std::string& label) {
  std::vector<std::string> out;
  std::stringstream ss(label);
  std::string t;
  while (std::getline(ss, t, '+')) out.push_back(t);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return task_order(a) < task_order(b); });
  return out;
}

// One decimal; rounding residue like -1e-14 prints as 0.0, not -0.0.
std::string one_decimal(double v) { return fmt("%.1f", std::abs(v) < 0.05 ? 0.0 : v); }

std::string pm(double mean, double std) { return one_decimal(mean) + " ± " + one_decimal(std); }

std::string provenance_line(const std::vector<MetricRow>& rows) {
  std::set<std::pair<std::string, std::uint64_t>> sources;
  for (const auto& r : rows) sources.emplace(r.config_hash, r.seed);
  std::string line = "# sources:";
  for (const auto& [hash, seed] : sources) line += " " + hash + "/seed=" + std::to_string(seed);
  return line + "\n";
}

}  // namespace

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream o;
  o << kHeader << "\n";
  for (const auto& r : rows)
    o << r.experiment << ',' << r.dataset << ',' << r.strategy << ',' << r.trained_tasks << ','
      << r.eval_task << ',' << r.method << ',' << r.fold << ',' << r.metric << ','
      << fmt("%.17g", r.value) << ',' << r.seed << ',' << r.config_hash << "\n";
  return o.str();
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  write_text(path, metrics_csv(rows));
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<MetricRow> rows;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kHeader) throw ParseError(origin, lineno, "unexpected metrics header");
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 11) throw ParseError(origin, lineno, "expected 11 fields");
    MetricRow r;
    r.experiment = f[0], r.dataset = f[1], r.strategy = f[2], r.trained_tasks = f[3];
    r.eval_task = f[4], r.method = f[5], r.metric = f[7], r.config_hash = f[10];
    try {
      std::size_t used = 0;
      r.fold = std::stoi(f[6], &used);
      if (used != f[6].size()) throw std::invalid_argument("fold");
      r.value = std::stod(f[8], &used);
      if (used != f[8].size()) throw std::invalid_argument("value");
      r.seed = std::stoull(f[9], &used);
      if (used != f[9].size()) throw std::invalid_argument("seed");
    } catch (const std::exception&) {
      throw ParseError(origin, lineno, "non-numeric fold, value or seed");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str(), path.string());
}

std::vector<MetricRow> collect_metrics(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("no results directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "metrics.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<MetricRow> rows;
  for (const auto& f : files) {
    auto part = read_metrics_csv(f);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

void write_metrics_json(const std::filesystem::path& path, const std::vector<MetricRow>& rows,
                        const std::string& config_snapshot) {
  nlohmann::ordered_json doc;
  doc["config"] = config_snapshot;
  doc["probe"] = "l2-logistic-regression/lbfgs (linear), relu-mlp/adam (mlp)";
  auto& arr = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"experiment", r.experiment}, {"dataset", r.dataset},
                   {"strategy", r.strategy}, {"trained_tasks", r.trained_tasks},
                   {"eval_task", r.eval_task}, {"method", r.method}, {"fold", r.fold},
                   {"metric", r.metric}, {"value", r.value}, {"seed", r.seed},
                   {"config_hash", r.config_hash}});
  write_text(path, doc.dump(2) + "\n");
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& curve,
                     const std::string& config_hash, std::uint64_t seed) {
  std::ostringstream o;
  o << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  o << "epoch,phase,train_loss_gc,train_loss_nc,train_loss_lp,val_metric,wall_time\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt("%.17g", *v) : std::string(); };
  for (const auto& c : curve)
    o << c.epoch << ',' << c.phase << ',' << opt(c.train_loss[0]) << ',' << opt(c.train_loss[1])
      << ',' << opt(c.train_loss[2]) << ',' << opt(c.val_metric) << ','
      << fmt("%.6f", c.wall_time) << "\n";
  write_text(path, o.str());
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string,
                         std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows)
    groups[{r.experiment, r.dataset, r.strategy, r.trained_tasks, r.eval_task, r.method,
            r.metric}]
        .push_back(r.value);
  std::vector<AggregateRow> out;
  for (const auto& [k, values] : groups) {
    const MeanStd ms = mean_std(values);
    AggregateRow a;
    std::tie(a.experiment, a.dataset, a.strategy, a.trained_tasks, a.eval_task, a.method,
             a.metric) = k;
    a.mean = ms.mean, a.std = ms.std, a.folds = ms.count;
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

/// classical-st means keyed by (dataset, task).
// Classical single-task means per (dataset, task). Rows scored with the
// model's own head win; linear-probe rows are used only when no head rows
// exist, so mixing evaluation methods never blends into one baseline.
std::map<std::pair<std::string, std::string>, double> baselines(const std::vector<MetricRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>> acc;
  for (const auto& r : rows)
    if (r.strategy == "classical-st" && r.trained_tasks == r.eval_task &&
        (r.method == "heads" || r.method == "linear"))
      acc[{r.dataset, r.eval_task}][r.method].push_back(r.value);
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [k, by_method] : acc) {
    auto it = by_method.find("heads");
    if (it == by_method.end()) it = by_method.begin();
    out[k] = mean_std(it->second).mean;
  }
  return out;
}

}  // namespace

std::vector<DeltaRow> delta_table(const std::vector<MetricRow>& rows) {
  const auto base = baselines(rows);
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  // (family) -> task -> fold -> value
  std::map<Key, std::map<std::string, std::map<int, double>>> fam;
  for (const auto& r : rows)
    if (r.experiment == "Q1" || r.experiment == "Q2")
      fam[{r.dataset, r.strategy, r.trained_tasks, r.method}][r.eval_task][r.fold] = r.value;
  std::vector<DeltaRow> out;
  for (const auto& [k, per_task] : fam) {
    DeltaRow d;
    std::tie(d.dataset, d.strategy, d.trained_tasks, d.method) = k;
    const auto tasks = task_list(d.trained_tasks);
    bool complete = true;
    for (const auto& t : tasks) {
      auto b = base.find({d.dataset, t});
      auto m = per_task.find(t);
      if (b == base.end() || m == per_task.end() || !(b->second > 0)) {
        complete = false;
        break;
      }
      std::vector<double> vals;
      for (const auto& [fold, v] : m->second) vals.push_back(v);
      d.multi.push_back(mean_std(vals).mean);
      d.baseline.push_back(b->second);
    }
    if (!complete) continue;
    d.delta = delta_m(d.multi, d.baseline);
    std::vector<double> per_fold;
    for (const auto& [fold, v0] : per_task.at(tasks.front())) {
      std::vector<double> m;
      for (const auto& t : tasks) {
        auto it = per_task.at(t).find(fold);
        if (it == per_task.at(t).end()) break;
        m.push_back(it->second);
      }
      if (m.size() == tasks.size()) per_fold.push_back(delta_m(m, d.baseline));
    }
    const MeanStd ms = mean_std(per_fold);
    d.fold_mean = ms.mean, d.fold_std = ms.std, d.folds = ms.count;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<DropRow> drop_matrix(const std::vector<MetricRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> cells;  // dataset, strategy, method, source, target
  for (const auto& r : rows)
    if (r.method != "mlp" && task_list(r.trained_tasks).size() == 1)
      cells[{r.dataset, r.strategy, r.method, r.trained_tasks, r.eval_task}].push_back(r.value);
  std::vector<DropRow> out;
  for (const auto& [k, values] : cells) {
    const auto& [dataset, strategy, method, source, target] = k;
    if (source == target) continue;
    auto ref = cells.find({dataset, strategy, method, target, target});
    if (ref == cells.end()) continue;
    DropRow d{dataset, strategy, method, source, target, mean_std(values).mean,
              mean_std(ref->second).mean, 0};
    if (d.reference > 0) d.drop = 100.0 * (d.reference - d.value) / d.reference;
    out.push_back(std::move(d));
  }
  return out;
}

std::string render_tables(const std::vector<MetricRow>& rows) {
  const auto agg = aggregate(rows);
  std::ostringstream o;
  auto section = [&](const std::string& title) { o << "\n== " << title << " ==\n"; };
  auto cell = [&](const AggregateRow& a) { return pm(a.mean, a.std); };

  section("Q1 single-task models (accuracy %, AUC % for LP)");
  for (const auto& a : agg)
    if (a.experiment == "Q1")
      o << a.dataset << "  " << a.strategy << " [" << a.method << "]  " << a.eval_task << ": "
        << cell(a) << "\n";

  section("Q2 multi-task models, per task");
  for (const auto& a : agg)
    if (a.experiment == "Q2")
      o << a.dataset << "  " << a.strategy << " [" << a.method << "]  " << a.trained_tasks
        << " -> " << a.eval_task << ": " << cell(a) << "\n";

  section("Q3 network probe on unseen tasks");
  for (const auto& a : agg)
    if (a.experiment == "Q3")
      o << a.dataset << "  " << a.strategy << "  " << a.trained_tasks << " -> " << a.eval_task
        << ": " << cell(a) << "\n";

  section("Q4 delta_m (%) against classical single-task");
  for (const auto& d : delta_table(rows))
    o << d.dataset << "  " << d.strategy << " [" << d.method << "]  " << d.trained_tasks << ": "
      << pm(d.fold_mean, d.fold_std) << "  (from means " << fmt("%.2f", d.delta) << ")\n";

  section("Fig1 transfer drop (%)");
  for (const auto& d : drop_matrix(rows))
    o << d.dataset << "  " << d.strategy << " [" << d.method << "]  " << d.source << " -> "
      << d.target << ": " << one_decimal(d.drop) << "\n";
  return o.str();
}

void write_report(const std::filesystem::path& out, const std::vector<MetricRow>& rows) {
  const std::string prov = provenance_line(rows);
  {
    std::ostringstream o;
    o << prov << "experiment,dataset,strategy,trained_tasks,eval_task,method,metric,mean,std,folds\n";
    for (const auto& a : aggregate(rows))
      o << a.experiment << ',' << a.dataset << ',' << a.strategy << ',' << a.trained_tasks << ','
        << a.eval_task << ',' << a.method << ',' << a.metric << ',' << fmt("%.17g", a.mean) << ','
        << fmt("%.17g", a.std) << ',' << a.folds << "\n";
    write_text(out / "summary.csv", o.str());
  }
  {
    std::ostringstream o;
    o << prov << "dataset,strategy,trained_tasks,method,multi,baseline,delta_m,fold_mean,fold_std,folds\n";
    auto join = [](const std::vector<double>& v) {
      std::string s;
      for (double x : v) s += (s.empty() ? "" : ";") + fmt("%.17g", x);
      return s;
    };
    for (const auto& d : delta_table(rows))
      o << d.dataset << ',' << d.strategy << ',' << d.trained_tasks << ',' << d.method << ','
        << join(d.multi) << ',' << join(d.baseline) << ',' << fmt("%.17g", d.delta) << ','
        << fmt("%.17g", d.fold_mean) << ',' << fmt("%.17g", d.fold_std) << ',' << d.folds << "\n";
    write_text(out / "delta_m.csv", o.str());
  }
  {
    std::ostringstream o;
    o << prov << "dataset,strategy,method,source,target,value,reference,drop_pct\n";
    for (const auto& d : drop_matrix(rows))
      o << d.dataset << ',' << d.strategy << ',' << d.method << ',' << d.source << ','
        << d.target << ',' << fmt("%.17g", d.value) << ',' << fmt("%.17g", d.reference) << ','
        << fmt("%.17g", d.drop) << "\n";
    write_text(out / "fig1_drop.csv", o.str());
  }
  write_text(out / "tables.txt", prov + render_tables(rows));

  nlohmann::ordered_json doc;
  auto& s = doc["summary"] = nlohmann::ordered_json::array();
  for (const auto& a : aggregate(rows))
    s.push_back({{"experiment", a.experiment}, {"dataset", a.dataset}, {"strategy", a.strategy},
                 {"trained_tasks", a.trained_tasks}, {"eval_task", a.eval_task},
                 {"method", a.method}, {"metric", a.metric}, {"mean", a.mean}, {"std", a.std},
                 {"folds", a.folds}});
  auto& dm = doc["delta_m"] = nlohmann::ordered_json::array();
  for (const auto& d : delta_table(rows))
    dm.push_back({{"dataset", d.dataset}, {"strategy", d.strategy},
                  {"trained_tasks", d.trained_tasks}, {"method", d.method}, {"multi", d.multi},
                  {"baseline", d.baseline}, {"delta_m", d.delta}, {"fold_mean", d.fold_mean},
                  {"fold_std", d.fold_std}, {"folds", d.folds}});
  auto& src = doc["sources"] = nlohmann::ordered_json::array();
  std::set<std::pair<std::string, std::uint64_t>> seen;
  for (const auto& r : rows)
    if (seen.emplace(r.config_hash, r.seed).second)
      src.push_back({{"config_hash", r.config_hash}, {"seed", r.seed}});
  write_text(out / "report.json", doc.dump(2) + "\n");
}

}  // namespace same
