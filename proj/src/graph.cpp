#include "same/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "same/errors.hpp"

namespace same {

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
}

void Graph::validate() const {
  if (num_nodes < 0) throw ArgumentError("graph: negative node count");
  if (node_features.rows() != num_nodes)
    throw ArgumentError("graph: feature rows (" + std::to_string(node_features.rows()) +
                        ") != num_nodes (" + std::to_string(num_nodes) + ")");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw ArgumentError("graph: edge endpoint out of range");
    if (u == v) throw ArgumentError("graph: self-loop");
    if (u > v) throw ArgumentError("graph: edge not canonical (u < v)");
    if (i > 0 && !(edges[i - 1] < edges[i]))
      throw ArgumentError("graph: edges unsorted or duplicated");
  }
  if (!node_labels.empty() && static_cast<int>(node_labels.size()) != num_nodes)
    throw ArgumentError("graph: node label count != num_nodes");
}

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Graph with_edges(const Graph& g, std::vector<Edge> edges) {
  Graph out = g;
  out.edges = canonical_edges(std::move(edges));
  return out;
}

Graph permute_nodes(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.num_nodes)
    throw ArgumentError("permute_nodes: permutation size mismatch");
  Graph out;
  out.num_nodes = g.num_nodes;
  out.graph_label = g.graph_label;
  out.node_features.resize(g.num_nodes, g.node_features.cols());
  if (g.has_node_labels()) out.node_labels.assign(g.num_nodes, 0);
  for (int i = 0; i < g.num_nodes; ++i) {
    out.node_features.row(perm[i]) = g.node_features.row(i);
    if (g.has_node_labels()) out.node_labels[perm[i]] = g.node_labels[i];
  }
  std::vector<Edge> edges;
  edges.reserve(g.edges.size());
  for (auto [u, v] : g.edges) edges.emplace_back(perm[u], perm[v]);
  out.edges = canonical_edges(std::move(edges));
  return out;
}

void GraphDataset::validate() const {
  for (const auto& g : graphs) {
    g.validate();
    if (g.feature_dim() != feature_dim) throw ArgumentError("dataset: inconsistent feature_dim");
    if (g.graph_label && (*g.graph_label < 0 || *g.graph_label >= num_graph_classes))
      throw ArgumentError("dataset: graph label out of range");
    for (int l : g.node_labels)
      if (l < 0 || l >= num_node_classes) throw ArgumentError("dataset: node label out of range");
  }
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t test = n * 2 / 10;
  const std::size_t val = n / 10;
  return {n - test - val, val, test};
}

namespace {

// Interleaves classes so any contiguous block is close to label-stratified:
// element j of class c sits at fractional position (j + 0.5) / |c|.
std::vector<int> stratified_order(const GraphDataset& dataset, std::mt19937_64& rng) {
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[dataset.graphs[i].graph_label.value_or(-1)].push_back(static_cast<int>(i));
  struct Slot {
    double position;
    int label;
    int id;
  };
  std::vector<Slot> slots;
  for (auto& [label, ids] : by_class) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t j = 0; j < ids.size(); ++j)
      slots.push_back({(static_cast<double>(j) + 0.5) / static_cast<double>(ids.size()), label, ids[j]});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return a.position != b.position ? a.position < b.position : a.label < b.label;
  });
  std::vector<int> order;
  order.reserve(slots.size());
  for (const auto& s : slots) order.push_back(s.id);
  return order;
}

}  // namespace

std::vector<FoldSplit> make_folds(const GraphDataset& dataset, int k, std::uint64_t seed,
                                  bool stratify) {
  const std::size_t n = dataset.size();
  if (n == 0) throw ArgumentError("make_folds: empty dataset");
  if (k < 2) throw ArgumentError("make_folds: k must be >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw ArgumentError("make_folds: k (" + std::to_string(k) + ") exceeds number of graphs (" +
                        std::to_string(n) + ")");

  std::mt19937_64 rng(seed);
  std::vector<int> order;
  if (stratify) {
    order = stratified_order(dataset, rng);
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
  }

  const SplitSizes sizes = split_sizes(n);
  std::vector<FoldSplit> folds;
  folds.reserve(k);
  for (int f = 0; f < k; ++f) {
    FoldSplit split;
    split.fold_index = f;
    const std::size_t offset = static_cast<std::size_t>(f) * n / static_cast<std::size_t>(k);
    for (std::size_t j = 0; j < n; ++j) {
      const int id = order[(offset + j) % n];
      if (j < sizes.test)
        split.test_ids.push_back(id);
      else if (j < sizes.test + sizes.val)
        split.val_ids.push_back(id);
      else
        split.train_ids.push_back(id);
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.val_ids.begin(), split.val_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

Tensor normalized_adjacency(const Graph& graph) {
  const int n = graph.num_nodes;
  Tensor a = Tensor::Identity(n, n);
  for (auto [u, v] : graph.edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().array().rsqrt();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) *= inv_sqrt_deg(i) * inv_sqrt_deg(j);
  return a;
}

}  // namespace same
