#include "same/synthetic.hpp"

#include <random>

#include "same/errors.hpp"

namespace same {

GraphDataset make_planted_dataset(const SyntheticConfig& c) {
  if (c.num_graphs < 1 || c.min_nodes < 2 || c.max_nodes < c.min_nodes || c.feature_dim < 1 ||
      c.nuisance_dims < 0)
    throw ArgumentError("make_planted_dataset: invalid size settings");
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(c.min_nodes, c.max_nodes);

  Eigen::RowVectorXd direction(c.feature_dim);
  for (int j = 0; j < c.feature_dim; ++j) direction[j] = gauss(rng);
  direction.normalize();

  GraphDataset ds;
  ds.name = "synthetic";
  ds.num_graph_classes = 2;
  ds.num_node_classes = 2;
  ds.feature_dim = c.feature_dim + c.nuisance_dims;
  for (int gi = 0; gi < c.num_graphs; ++gi) {
    Graph g;
    g.num_nodes = size(rng);
    g.graph_label = gi % 2;
    const double p_in = gi % 2 == 0 ? c.p_in : c.p_in_alt;
    g.node_labels.resize(static_cast<std::size_t>(g.num_nodes));
    for (int v = 0; v < g.num_nodes; ++v) g.node_labels[v] = v < g.num_nodes / 2 ? 0 : 1;
    std::shuffle(g.node_labels.begin(), g.node_labels.end(), rng);
    for (int u = 0; u < g.num_nodes; ++u)
      for (int v = u + 1; v < g.num_nodes; ++v)
        if (unit(rng) < (g.node_labels[u] == g.node_labels[v] ? p_in : c.p_out))
          g.edges.emplace_back(u, v);
    g.node_features.resize(g.num_nodes, ds.feature_dim);
    for (int v = 0; v < g.num_nodes; ++v) {
      const double sign = g.node_labels[v] == 1 ? 1.0 : -1.0;
      for (int j = 0; j < c.feature_dim; ++j)
        g.node_features(v, j) = sign * c.signal * direction[j] + c.noise * gauss(rng);
      for (int j = c.feature_dim; j < ds.feature_dim; ++j) g.node_features(v, j) = c.nuisance * gauss(rng);
    }
    ds.graphs.push_back(std::move(g));
  }
  ds.validate();
  return ds;
}

}  // namespace same
