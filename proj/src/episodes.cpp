#include "same/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "same/errors.hpp"

namespace same {

bool TaskData::has(Task task) const {
  switch (task) {
    case Task::kGC: return !gc.empty();
    case Task::kNC: return !nc.empty();
    case Task::kLP: return !lp.empty();
  }
  return false;
}

std::size_t gc_support_count(std::size_t n) {
  if (n < 2) return n;
  const auto s = static_cast<std::size_t>(std::lround(kGcSupportFraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(s, 1, n - 1);
}

std::size_t nc_labelled_count(std::size_t n) {
  if (n < 2) return n;
  const auto s = static_cast<std::size_t>(std::lround(kNcLabelledFraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(s, 1, n - 1);
}

std::size_t lp_removed_count(std::size_t m) {
  if (m == 0) return 0;
  return std::max<std::size_t>(1, m * 2 / 10);
}

std::size_t lp_target_negative_count(std::size_t k) {
  if (k < 2) return 0;
  return std::max<std::size_t>(1, k * 2 / 10);
}

std::vector<int> per_class_round_robin(const std::vector<std::vector<int>>& nodes_by_class,
                                       std::size_t quota, std::mt19937_64& rng,
                                       std::vector<std::string>* warnings) {
  if (quota < 1) throw ArgumentError("per_class_round_robin: quota must be >= 1");
  std::vector<std::vector<int>> remaining;
  std::size_t total = 0;
  for (const auto& nodes : nodes_by_class)
    if (!nodes.empty()) {
      remaining.push_back(nodes);
      total += nodes.size();
    }
  if (quota > total) {
    if (warnings)
      warnings->push_back("round robin quota " + std::to_string(quota) + " capped at " +
                          std::to_string(total) + " nodes");
    quota = total;
  }
  std::vector<std::size_t> order(remaining.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> chosen;
  chosen.reserve(quota);
  while (chosen.size() < quota) {
    for (std::size_t c : order) {
      if (chosen.size() == quota) break;
      auto& pool = remaining[c];
      if (pool.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t k = pick(rng);
      chosen.push_back(pool[k]);
      pool[k] = pool.back();
      pool.pop_back();
    }
  }
  return chosen;
}

std::vector<Edge> sample_negative_edges(const Graph& graph, std::size_t count,
                                        std::mt19937_64& rng) {
  std::vector<Edge> candidates;
  for (int u = 0; u < graph.num_nodes; ++u)
    for (int v = u + 1; v < graph.num_nodes; ++v)
      if (!graph.has_edge(u, v)) candidates.emplace_back(u, v);
  const std::size_t k = std::min(count, candidates.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  candidates.resize(k);
  return candidates;
}

std::optional<LinkSplit> split_links(const Graph& graph, std::mt19937_64& rng) {
  const std::size_t m = graph.edges.size();
  if (m < 2) return std::nullopt;

  std::vector<Edge> negatives = sample_negative_edges(graph, m, rng);
  const std::size_t n_target_neg = lp_target_negative_count(negatives.size());
  const std::size_t n_support_neg = negatives.size() - n_target_neg;

  std::vector<Edge> shuffled = graph.edges;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t n_removed = lp_removed_count(m);
  std::vector<Edge> removed(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_removed));
  std::vector<Edge> kept(shuffled.begin() + static_cast<std::ptrdiff_t>(n_removed), shuffled.end());
  std::sort(removed.begin(), removed.end());

  LinkSplit split;
  split.support.graph = with_edges(graph, std::move(kept));
  split.support.positive_edges = split.support.graph.edges;
  split.support.negative_edges.assign(negatives.begin(),
                                      negatives.begin() + static_cast<std::ptrdiff_t>(n_support_neg));
  split.target.graph = split.support.graph;
  split.target.positive_edges = std::move(removed);
  split.target.negative_edges.assign(negatives.begin() + static_cast<std::ptrdiff_t>(n_support_neg),
                                     negatives.end());
  return split;
}

std::optional<std::pair<NCInstance, NCInstance>> split_nodes(const Graph& graph,
                                                             std::mt19937_64& rng) {
  if (!graph.has_node_labels() || graph.num_nodes < 2) return std::nullopt;
  std::map<int, std::vector<int>> by_label;
  for (int v = 0; v < graph.num_nodes; ++v) by_label[graph.node_labels[v]].push_back(v);
  std::vector<std::vector<int>> nodes_by_class;
  for (auto& [label, nodes] : by_label) nodes_by_class.push_back(std::move(nodes));

  std::vector<int> labelled = per_class_round_robin(
      nodes_by_class, nc_labelled_count(static_cast<std::size_t>(graph.num_nodes)), rng);
  std::sort(labelled.begin(), labelled.end());
  std::vector<int> rest;
  for (int v = 0, j = 0; v < graph.num_nodes; ++v) {
    if (j < static_cast<int>(labelled.size()) && labelled[j] == v)
      ++j;
    else
      rest.push_back(v);
  }
  return std::make_pair(NCInstance{&graph, std::move(labelled)}, NCInstance{&graph, std::move(rest)});
}

MultiTaskEpisode build_episode(std::span<const Graph* const> batch, const TaskWeights& weights,
                               std::mt19937_64& rng, const TaskSet& tasks) {
  if (tasks.empty()) throw ArgumentError("build_episode: empty task set");
  const std::vector<Task> active = tasks.tasks();
  if (batch.size() < active.size())
    throw ArgumentError("build_episode: batch of " + std::to_string(batch.size()) +
                        " graphs cannot feed " + std::to_string(active.size()) + " task pools");

  MultiTaskEpisode ep;
  ep.weights = weights;

  std::vector<const Graph*> shuffled(batch.begin(), batch.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const std::size_t base = shuffled.size() / active.size();
  const std::size_t extra = shuffled.size() % active.size();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const std::size_t take = base + (i < extra ? 1 : 0);
    auto& pool = ep.pools[static_cast<std::size_t>(active[i])];
    pool.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                shuffled.begin() + static_cast<std::ptrdiff_t>(pos + take));
    pos += take;
  }

  if (tasks.contains(Task::kGC)) {
    std::vector<const Graph*> pool = ep.pools[0];
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t s = gc_support_count(pool.size());
    ep.support.gc.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
    ep.target.gc.assign(pool.begin() + static_cast<std::ptrdiff_t>(s), pool.end());
    if (ep.target.gc.empty()) ep.warnings.push_back("GC pool too small for a target set");
  }
  if (tasks.contains(Task::kNC)) {
    for (const Graph* g : ep.pools[1]) {
      auto split = split_nodes(*g, rng);
      if (!split) {
        ep.warnings.push_back("NC: graph skipped (no node labels or fewer than 2 nodes)");
        continue;
      }
      ep.support.nc.push_back(std::move(split->first));
      ep.target.nc.push_back(std::move(split->second));
    }
  }
  if (tasks.contains(Task::kLP)) {
    for (const Graph* g : ep.pools[2]) {
      auto split = split_links(*g, rng);
      if (!split) {
        ep.warnings.push_back("LP: graph with " + std::to_string(g->edges.size()) +
                              " edges skipped (needs >= 2)");
        continue;
      }
      ep.support.lp.push_back(std::move(split->support));
      ep.target.lp.push_back(std::move(split->target));
      ep.lp_sources.push_back(g);
    }
  }
  return ep;
}

namespace {

int index_in(std::span<const Graph* const> batch, const Graph* g) {
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (batch[i] == g) return static_cast<int>(i);
  return -1;
}

void write_edges(std::ostream& out, const char* tag, const std::vector<Edge>& edges) {
  out << ' ' << tag << '[';
  for (std::size_t i = 0; i < edges.size(); ++i)
    out << (i ? " " : "") << edges[i].first << '-' << edges[i].second;
  out << ']';
}

}  // namespace

std::string dump_episode(const MultiTaskEpisode& ep, std::span<const Graph* const> batch) {
  std::ostringstream out;
  out << "episode weights gc=" << ep.weights.gc << " nc=" << ep.weights.nc
      << " lp=" << ep.weights.lp << '\n';
  for (Task t : kAllTasks) {
    out << "pool " << to_string(t);
    for (const Graph* g : ep.pools[static_cast<std::size_t>(t)]) out << ' ' << index_in(batch, g);
    out << '\n';
  }
  out << "gc support";
  for (const Graph* g : ep.support.gc) out << ' ' << index_in(batch, g);
  out << "\ngc target";
  for (const Graph* g : ep.target.gc) out << ' ' << index_in(batch, g);
  out << '\n';
  for (std::size_t i = 0; i < ep.support.nc.size(); ++i) {
    out << "nc graph " << index_in(batch, ep.support.nc[i].graph) << " support";
    for (int v : ep.support.nc[i].labelled_nodes) out << ' ' << v;
    out << " | target";
    for (int v : ep.target.nc[i].labelled_nodes) out << ' ' << v;
    out << '\n';
  }
  for (std::size_t i = 0; i < ep.support.lp.size(); ++i) {
    out << "lp graph " << index_in(batch, ep.lp_sources[i]);
    write_edges(out, "train", ep.support.lp[i].graph.edges);
    write_edges(out, "support+", ep.support.lp[i].positive_edges);
    write_edges(out, "support-", ep.support.lp[i].negative_edges);
    write_edges(out, "target+", ep.target.lp[i].positive_edges);
    write_edges(out, "target-", ep.target.lp[i].negative_edges);
    out << '\n';
  }
  for (const auto& w : ep.warnings) out << "warning " << w << '\n';
  return out.str();
}

}  // namespace same
