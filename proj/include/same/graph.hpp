#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "same/tensor.hpp"

namespace same {

using Edge = std::pair<int, int>;

/// Undirected simple graph with dense node features.
///
/// Edges are stored canonically as (u, v) with u < v, sorted, without
/// duplicates or self-loops.
struct Graph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  Tensor node_features;  // num_nodes x feature_dim
  std::vector<int> node_labels;  // empty when the dataset has none
  std::optional<int> graph_label;

  int feature_dim() const { return static_cast<int>(node_features.cols()); }
  bool has_node_labels() const { return !node_labels.empty(); }
  bool has_edge(int u, int v) const;

  /// Throws ArgumentError when an invariant is violated.
  void validate() const;
};

/// Sorts, canonicalizes (u < v) and deduplicates; drops self-loops.
std::vector<Edge> canonical_edges(std::vector<Edge> edges);

/// Copy of `g` with its edge list replaced.
Graph with_edges(const Graph& g, std::vector<Edge> edges);

/// Relabels nodes: node i of `g` becomes node perm[i] of the result.
Graph permute_nodes(const Graph& g, const std::vector<int>& perm);

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_graph_classes = 0;
  int num_node_classes = 0;
  int feature_dim = 0;

  std::size_t size() const { return graphs.size(); }
  void validate() const;
};

struct FoldSplit {
  int fold_index = 0;
  std::vector<int> train_ids;
  std::vector<int> val_ids;
  std::vector<int> test_ids;
};

/// Split sizes for `n` graphs: test = floor(0.2 n), val = floor(0.1 n),
/// train takes the remainder.
struct SplitSizes {
  std::size_t train, val, test;
};
SplitSizes split_sizes(std::size_t n);

/// Builds k folds with 70/10/20 train/val/test proportions.
///
/// Graphs are ordered by a label-stratified interleaving (shuffled per class
/// with `seed`); fold f takes its test block starting at offset
/// floor(f * n / k), followed by the validation block, wrapping around.
/// Every graph lands in some test set. Test sets are pairwise disjoint
/// whenever k <= 5.
std::vector<FoldSplit> make_folds(const GraphDataset& dataset, int k, std::uint64_t seed,
                                  bool stratify = true);

/// D^{-1/2} (A + I) D^{-1/2}, with D the degree matrix of A + I.
Tensor normalized_adjacency(const Graph& graph);

}  // namespace same
