#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "same/graph.hpp"
#include "same/tasks.hpp"

namespace same {

/// Support or target half of a multi-task episode.
struct TaskData {
  std::vector<const Graph*> gc;
  std::vector<NCInstance> nc;
  std::vector<LPInstance> lp;

  bool has(Task task) const;
};

/// One (loss, support, target) tuple with a disjoint graph pool per task.
///
/// Graph pointers refer to the caller's batch and must outlive the episode.
struct MultiTaskEpisode {
  TaskData support;
  TaskData target;
  TaskWeights weights;
  /// Graphs assigned to each task pool, indexed by Task.
  std::array<std::vector<const Graph*>, 3> pools;
  /// Source graph of each LP instance (parallel to support.lp / target.lp).
  std::vector<const Graph*> lp_sources;
  std::vector<std::string> warnings;

  /// True when both halves carry data for `task`.
  bool has(Task task) const { return support.has(task) && target.has(task); }
};

/// Fraction constants of the episode protocol.
inline constexpr double kGcSupportFraction = 0.6;
inline constexpr double kNcLabelledFraction = 0.3;
inline constexpr double kLpRemovedFraction = 0.2;
inline constexpr double kLpTargetNegativeFraction = 0.2;

/// Number of GC support graphs for a pool of `n`: round(0.6 n), kept in
/// [1, n-1] when n >= 2.
std::size_t gc_support_count(std::size_t n);
/// Labelled support nodes for an n-node graph: max(1, round(0.3 n)), at most n-1.
std::size_t nc_labelled_count(std::size_t n);
/// Removed (target) positives for a graph with m edges: max(1, floor(0.2 m)).
std::size_t lp_removed_count(std::size_t m);
/// Target share of k negatives: floor(0.2 k), at least 1 when k >= 2.
std::size_t lp_target_negative_count(std::size_t k);

/// Visits classes in a random cyclic order, drawing one node per visit
/// without replacement and skipping exhausted classes, until `quota` nodes
/// are chosen. A quota above the node total is capped (warning appended).
std::vector<int> per_class_round_robin(const std::vector<std::vector<int>>& nodes_by_class,
                                       std::size_t quota, std::mt19937_64& rng,
                                       std::vector<std::string>* warnings = nullptr);

/// Uniform sample without replacement of min(count, available) node pairs
/// (u < v) that are not edges of `graph`.
std::vector<Edge> sample_negative_edges(const Graph& graph, std::size_t count,
                                        std::mt19937_64& rng);

/// Support/target pair for link prediction on one graph.
struct LinkSplit {
  LPInstance support;
  LPInstance target;
};

/// Removes lp_removed_count(|E|) random edges as target positives, samples
/// |E| negatives (capped by availability) and splits them 80/20. Both
/// instances carry the reduced graph. Returns nullopt for graphs with fewer
/// than two edges.
std::optional<LinkSplit> split_links(const Graph& graph, std::mt19937_64& rng);

/// NC support/target pair: round-robin labelled set and its complement.
/// Returns nullopt for graphs without node labels or with fewer than two nodes.
std::optional<std::pair<NCInstance, NCInstance>> split_nodes(const Graph& graph,
                                                             std::mt19937_64& rng);

/// Builds a multi-task episode from `batch`.
///
/// The batch is shuffled and divided into equal-as-possible pools, one per
/// task in `tasks` (remainder to GC, then NC, then LP). With a single task
/// the whole batch is its pool.
MultiTaskEpisode build_episode(std::span<const Graph* const> batch, const TaskWeights& weights,
                               std::mt19937_64& rng, const TaskSet& tasks = TaskSet::all());

/// Plain-text dump of pool membership, splits and edge lists. Graphs are
/// named by their position in `batch`.
std::string dump_episode(const MultiTaskEpisode& episode, std::span<const Graph* const> batch);

}  // namespace same
