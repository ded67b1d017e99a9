#pragma once

#include <cstdint>

#include "same/graph.hpp"

namespace same {

/// Planted two-community graphs.
///
/// Each graph splits its nodes into two communities (the node labels) and
/// links pairs inside a community with probability p_in and across with
/// p_out. The graph label selects the within-community density: class 0
/// uses p_in, class 1 uses p_in_alt. Features are noisy: the node label
/// shifts a fixed direction by +-signal, and every coordinate gets
/// Gaussian noise of scale `noise`. The last `nuisance_dims` coordinates
/// carry no signal, only Gaussian noise of scale `nuisance`.
struct SyntheticConfig {
  int num_graphs = 60;
  int min_nodes = 12;
  int max_nodes = 20;
  int feature_dim = 8;
  double p_in = 0.6;
  double p_in_alt = 0.3;
  double p_out = 0.05;
  double signal = 0.5;
  double noise = 1.0;
  int nuisance_dims = 8;
  double nuisance = 5.0;
  std::uint64_t seed = 0;
};

GraphDataset make_planted_dataset(const SyntheticConfig& config = {});

}  // namespace same
