#include "same/tudataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "same/errors.hpp"

namespace fs = std::filesystem;

namespace same {
namespace {

using Row = std::vector<std::string>;

struct TextFile {
  std::string filename;
  std::vector<std::pair<std::size_t, Row>> rows;  // (1-based line number, tokens)
};

Row tokenize(const std::string& line) {
  Row tokens;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::optional<TextFile> read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  TextFile file{path.filename().string(), {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Row tokens = tokenize(line);
    if (!tokens.empty()) file.rows.emplace_back(lineno, std::move(tokens));
  }
  return file;
}

TextFile require_file(const fs::path& dir, const std::string& filename) {
  auto file = read_file(dir / filename);
  if (!file) throw FormatError("missing mandatory file " + filename + " in " + dir.string());
  return std::move(*file);
}

long long to_int(const TextFile& file, std::size_t line, const std::string& token) {
  long long value = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(file.filename, line, "expected integer, got '" + token + "'");
  return value;
}

double to_real(const TextFile& file, std::size_t line, const std::string& token) {
  double value = 0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(file.filename, line, "expected real number, got '" + token + "'");
  return value;
}

std::vector<long long> single_ints(const TextFile& file) {
  std::vector<long long> values;
  values.reserve(file.rows.size());
  for (const auto& [line, tokens] : file.rows) {
    if (tokens.size() != 1)
      throw ParseError(file.filename, line, "expected exactly one integer per line");
    values.push_back(to_int(file, line, tokens[0]));
  }
  return values;
}

// Maps raw label values to 0..C-1 in increasing order.
std::pair<std::vector<int>, int> dense_labels(const std::vector<long long>& raw) {
  std::set<long long> distinct(raw.begin(), raw.end());
  std::map<long long, int> index;
  for (long long v : distinct) index.emplace(v, static_cast<int>(index.size()));
  std::vector<int> out;
  out.reserve(raw.size());
  for (long long v : raw) out.push_back(index.at(v));
  return {out, static_cast<int>(distinct.size())};
}

}  // namespace

GraphDataset parse_tudataset(const fs::path& directory, const std::string& name,
                             FeatureSource features) {
  if (!fs::is_directory(directory))
    throw FormatError("dataset directory not found: " + directory.string());

  const TextFile adjacency = require_file(directory, name + "_A.txt");
  const TextFile indicator_file = require_file(directory, name + "_graph_indicator.txt");
  const TextFile graph_label_file = require_file(directory, name + "_graph_labels.txt");
  const auto node_label_file = read_file(directory / (name + "_node_labels.txt"));
  const auto attribute_file = read_file(directory / (name + "_node_attributes.txt"));

  const std::vector<long long> indicator = single_ints(indicator_file);
  const std::size_t total_nodes = indicator.size();
  long long num_graphs = 0;
  for (std::size_t i = 0; i < indicator.size(); ++i) {
    if (indicator[i] < 1)
      throw IntegrityError(indicator_file.filename + ": graph id " + std::to_string(indicator[i]) +
                           " at node " + std::to_string(i + 1) + " is not >= 1");
    num_graphs = std::max(num_graphs, indicator[i]);
  }

  const std::vector<long long> raw_graph_labels = single_ints(graph_label_file);
  if (static_cast<long long>(raw_graph_labels.size()) != num_graphs)
    throw IntegrityError(graph_label_file.filename + " has " +
                         std::to_string(raw_graph_labels.size()) + " labels but " +
                         std::to_string(num_graphs) + " graphs are indicated");

  GraphDataset dataset;
  dataset.name = name;
  dataset.graphs.resize(static_cast<std::size_t>(num_graphs));

  // Global node id -> (graph, local index).
  std::vector<int> local_index(total_nodes);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    Graph& g = dataset.graphs[static_cast<std::size_t>(indicator[i] - 1)];
    local_index[i] = g.num_nodes++;
  }
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi)
    if (dataset.graphs[gi].num_nodes == 0)
      throw IntegrityError(indicator_file.filename + ": graph " + std::to_string(gi + 1) +
                           " has no nodes");

  std::vector<std::vector<Edge>> raw_edges(dataset.graphs.size());
  for (const auto& [line, tokens] : adjacency.rows) {
    if (tokens.size() != 2) throw ParseError(adjacency.filename, line, "expected 'i, j'");
    const long long a = to_int(adjacency, line, tokens[0]);
    const long long b = to_int(adjacency, line, tokens[1]);
    for (long long node : {a, b})
      if (node < 1 || node > static_cast<long long>(total_nodes))
        throw IntegrityError(adjacency.filename + ":" + std::to_string(line) + ": node index " +
                             std::to_string(node) + " out of range [1, " +
                             std::to_string(total_nodes) + "]");
    const long long ga = indicator[a - 1], gb = indicator[b - 1];
    if (ga != gb)
      throw IntegrityError(adjacency.filename + ":" + std::to_string(line) +
                           ": edge joins nodes of different graphs");
    raw_edges[ga - 1].emplace_back(local_index[a - 1], local_index[b - 1]);
  }

  auto [graph_labels, num_graph_classes] = dense_labels(raw_graph_labels);
  dataset.num_graph_classes = num_graph_classes;

  std::vector<int> node_labels;
  if (node_label_file) {
    const auto raw = single_ints(*node_label_file);
    if (raw.size() != total_nodes)
      throw IntegrityError(node_label_file->filename + " has " + std::to_string(raw.size()) +
                           " rows but there are " + std::to_string(total_nodes) + " nodes");
    std::tie(node_labels, dataset.num_node_classes) = dense_labels(raw);
  }

  Tensor attributes;
  if (attribute_file) {
    if (attribute_file->rows.size() != total_nodes)
      throw IntegrityError(attribute_file->filename + " has " +
                           std::to_string(attribute_file->rows.size()) + " rows but there are " +
                           std::to_string(total_nodes) + " nodes");
    const std::size_t cols = attribute_file->rows.front().second.size();
    attributes.resize(static_cast<Eigen::Index>(total_nodes), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < total_nodes; ++i) {
      const auto& [line, tokens] = attribute_file->rows[i];
      if (tokens.size() != cols)
        throw ParseError(attribute_file->filename, line,
                         "expected " + std::to_string(cols) + " values, got " +
                             std::to_string(tokens.size()));
      for (std::size_t c = 0; c < cols; ++c)
        attributes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            to_real(*attribute_file, line, tokens[c]);
    }
  }

  const bool use_attributes = attribute_file.has_value();
  const bool use_one_hot =
      !node_labels.empty() &&
      (!use_attributes || features == FeatureSource::kAttributesAndLabels);
  const int attr_dim = use_attributes ? static_cast<int>(attributes.cols()) : 0;
  const int onehot_dim = use_one_hot ? dataset.num_node_classes : 0;
  dataset.feature_dim = attr_dim + onehot_dim;
  if (dataset.feature_dim == 0) dataset.feature_dim = 1;

  for (auto& g : dataset.graphs) {
    g.node_features = Tensor::Zero(g.num_nodes, dataset.feature_dim);
    if (!node_labels.empty()) g.node_labels.resize(g.num_nodes);
  }
  for (std::size_t i = 0; i < total_nodes; ++i) {
    Graph& g = dataset.graphs[static_cast<std::size_t>(indicator[i] - 1)];
    const int row = local_index[i];
    if (use_attributes) g.node_features.row(row).head(attr_dim) = attributes.row(i);
    if (use_one_hot) g.node_features(row, attr_dim + node_labels[i]) = 1.0;
    if (attr_dim + onehot_dim == 0) g.node_features(row, 0) = 1.0;
    if (!node_labels.empty()) g.node_labels[row] = node_labels[i];
  }
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi) {
    dataset.graphs[gi].edges = canonical_edges(std::move(raw_edges[gi]));
    dataset.graphs[gi].graph_label = graph_labels[gi];
  }
  dataset.validate();
  return dataset;
}

void write_tudataset(const GraphDataset& dataset, const fs::path& directory,
                     bool write_attributes) {
  fs::create_directories(directory);
  const std::string& name = dataset.name;
  std::ofstream adj(directory / (name + "_A.txt"));
  std::ofstream ind(directory / (name + "_graph_indicator.txt"));
  std::ofstream glab(directory / (name + "_graph_labels.txt"));
  std::ofstream nlab, attr;
  const bool has_node_labels = dataset.num_node_classes > 0;
  if (has_node_labels) nlab.open(directory / (name + "_node_labels.txt"));
  if (write_attributes) attr.open(directory / (name + "_node_attributes.txt"));
  if (!adj || !ind || !glab) throw FormatError("cannot write dataset to " + directory.string());

  char buf[64];
  long long offset = 0;
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi) {
    const Graph& g = dataset.graphs[gi];
    for (auto [u, v] : g.edges) {
      adj << offset + u + 1 << ", " << offset + v + 1 << '\n';
      adj << offset + v + 1 << ", " << offset + u + 1 << '\n';
    }
    for (int i = 0; i < g.num_nodes; ++i) {
      ind << gi + 1 << '\n';
      if (has_node_labels) nlab << g.node_labels[i] << '\n';
      if (write_attributes) {
        for (int c = 0; c < g.feature_dim(); ++c) {
          std::snprintf(buf, sizeof buf, "%.17g", g.node_features(i, c));
          attr << (c ? ", " : "") << buf;
        }
        attr << '\n';
      }
    }
    glab << g.graph_label.value_or(0) << '\n';
    offset += g.num_nodes;
  }
}

}  // namespace same
