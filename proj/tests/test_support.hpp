// Shared helpers for the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "same/episodes.hpp"
#include "same/graph.hpp"
#include "same/params.hpp"

namespace same::testing {

inline std::string fixture_dir(const std::string& name) {
  return std::string(SAME_FIXTURE_ROOT) + "/" + name;
}

/// Erdos-Renyi graph with Gaussian features and random labels.
inline Graph random_graph(std::mt19937_64& rng, int n, int feature_dim, double p, int node_classes,
                          int graph_classes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Graph g;
  g.num_nodes = n;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (unit(rng) < p) g.edges.emplace_back(u, v);
  g.node_features.resize(n, feature_dim);
  for (Eigen::Index i = 0; i < g.node_features.size(); ++i) g.node_features.data()[i] = gauss(rng);
  std::uniform_int_distribution<int> nc(0, node_classes - 1), gc(0, graph_classes - 1);
  for (int v = 0; v < n; ++v) g.node_labels.push_back(nc(rng));
  g.graph_label = gc(rng);
  return g;
}

/// ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12) over every
/// entry of every parameter selected by `mask` (all when empty).
/// Zero-initialized biases can leave a node with an all-zero pre-activation,
/// where relu and row normalization are not differentiable. Gradient checks
/// move off that point first.
inline ParamSet jittered(ParamSet params, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, scale);
  for (auto& v : params.values)
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] += noise(rng);
  return params;
}

inline double gradient_relative_error(const ObjectiveFn& f, const ParamSet& params,
                                      const std::vector<bool>& mask = {}, double eps = 1e-6) {
  GradientMap analytic;
  f(params, analytic);
  double diff2 = 0, a2 = 0, n2 = 0;
  ParamSet probe = params;
  GradientMap unused;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    for (Eigen::Index k = 0; k < params.values[i].size(); ++k) {
      double& x = probe.values[i].data()[k];
      const double orig = x;
      const double h = eps * (1.0 + std::abs(orig));
      x = orig + h;
      const double fp = f(probe, unused);
      x = orig - h;
      const double fm = f(probe, unused);
      x = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic[i].data()[k];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
  }
  return std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
}

/// Checks every episode-module invariant of `ep` built from `batch` with
/// `tasks`. Returns one message per violation.
inline std::vector<std::string> episode_violations(const MultiTaskEpisode& ep,
                                                   std::span<const Graph* const> batch,
                                                   const TaskSet& tasks) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& m) { bad.push_back(m); };
  const std::vector<Task> active = tasks.tasks();

  // Pools: disjoint, cover the batch, equal-as-possible with remainder GC -> NC -> LP.
  std::multiset<const Graph*> seen;
  for (Task t : kAllTasks)
    for (const Graph* g : ep.pools[static_cast<std::size_t>(t)]) seen.insert(g);
  if (seen != std::multiset<const Graph*>(batch.begin(), batch.end()))
    fail("pools do not partition the batch");
  const std::size_t base = batch.size() / active.size(), extra = batch.size() % active.size();
  for (std::size_t i = 0; i < active.size(); ++i)
    if (ep.pools[static_cast<std::size_t>(active[i])].size() != base + (i < extra ? 1 : 0))
      fail("pool size of " + std::string(to_string(active[i])));
  for (Task t : kAllTasks)
    if (!tasks.contains(t) && !ep.pools[static_cast<std::size_t>(t)].empty())
      fail("pool for an unconfigured task");

  // GC: 60/40 split of the pool, disjoint.
  if (tasks.contains(Task::kGC)) {
    const auto& pool = ep.pools[0];
    if (ep.support.gc.size() != gc_support_count(pool.size())) fail("GC support size");
    if (ep.support.gc.size() + ep.target.gc.size() != pool.size()) fail("GC split size");
    std::set<const Graph*> s(ep.support.gc.begin(), ep.support.gc.end());
    for (const Graph* g : ep.target.gc)
      if (s.count(g)) fail("GC support/target overlap");
    std::set<const Graph*> both(s);
    both.insert(ep.target.gc.begin(), ep.target.gc.end());
    if (both != std::set<const Graph*>(pool.begin(), pool.end())) fail("GC split != pool");
  }

  // NC: complementary labelled sets, counts, round-robin balance.
  if (tasks.contains(Task::kNC)) {
    if (ep.support.nc.size() != ep.target.nc.size()) fail("NC support/target count");
    std::size_t eligible = 0;
    for (const Graph* g : ep.pools[1]) eligible += g->has_node_labels() && g->num_nodes >= 2;
    if (ep.support.nc.size() != eligible) fail("NC instance count");
    for (std::size_t i = 0; i < std::min(ep.support.nc.size(), ep.target.nc.size()); ++i) {
      const auto& s = ep.support.nc[i];
      const auto& t = ep.target.nc[i];
      if (s.graph != t.graph) fail("NC pair on different graphs");
      const int n = s.graph->num_nodes;
      std::vector<int> all(s.labelled_nodes);
      all.insert(all.end(), t.labelled_nodes.begin(), t.labelled_nodes.end());
      std::sort(all.begin(), all.end());
      std::vector<int> expect(static_cast<std::size_t>(n));
      for (int v = 0; v < n; ++v) expect[v] = v;
      if (all != expect) fail("NC masks not complementary");
      if (s.labelled_nodes.size() != nc_labelled_count(static_cast<std::size_t>(n)))
        fail("NC labelled count");
      if (s.labelled_nodes.empty() || t.labelled_nodes.empty()) fail("NC empty mask");
      // Round robin: per-class counts differ by <= 1 among classes not exhausted.
      std::map<int, int> chosen, avail;
      for (int v = 0; v < n; ++v) ++avail[s.graph->node_labels[v]];
      for (int v : s.labelled_nodes) ++chosen[s.graph->node_labels[v]];
      int lo = 1 << 30, hi = 0;
      for (const auto& [c, k] : avail) {
        const int got = chosen[c];
        hi = std::max(hi, got);
        if (got < k) lo = std::min(lo, got);
      }
      if (lo != (1 << 30) && hi - lo > 1) fail("NC round-robin imbalance");
    }
  }

  // LP: positives disjoint, union = original edges, negatives are non-edges, 80/20.
  if (tasks.contains(Task::kLP)) {
    if (ep.support.lp.size() != ep.target.lp.size() || ep.lp_sources.size() != ep.support.lp.size())
      fail("LP instance count");
    std::size_t eligible = 0;
    for (const Graph* g : ep.pools[2]) eligible += g->edges.size() >= 2;
    if (ep.support.lp.size() != eligible) fail("LP skipped a usable graph");
    for (std::size_t i = 0; i < std::min(ep.support.lp.size(), ep.lp_sources.size()); ++i) {
      const Graph& orig = *ep.lp_sources[i];
      const auto& s = ep.support.lp[i];
      const auto& t = ep.target.lp[i];
      if (std::find(ep.pools[2].begin(), ep.pools[2].end(), &orig) == ep.pools[2].end())
        fail("LP source outside its pool");
      std::set<Edge> sp(s.positive_edges.begin(), s.positive_edges.end());
      std::set<Edge> tp(t.positive_edges.begin(), t.positive_edges.end());
      for (const Edge& e : tp)
        if (sp.count(e)) fail("LP support/target positives overlap");
      std::set<Edge> uni(sp);
      uni.insert(tp.begin(), tp.end());
      if (uni != std::set<Edge>(orig.edges.begin(), orig.edges.end())) fail("LP positives != edges");
      if (sp != std::set<Edge>(s.graph.edges.begin(), s.graph.edges.end()))
        fail("LP support positives != training edges");
      if (t.graph.edges != s.graph.edges) fail("LP target graph differs from training graph");
      if (t.positive_edges.size() != lp_removed_count(orig.edges.size())) fail("LP removed count");
      const std::size_t n = static_cast<std::size_t>(orig.num_nodes);
      const std::size_t available = n * (n - 1) / 2 - orig.edges.size();
      const std::size_t k = std::min(orig.edges.size(), available);
      if (s.negative_edges.size() + t.negative_edges.size() != k) fail("LP negative count");
      if (t.negative_edges.size() != lp_target_negative_count(k)) fail("LP 80/20 negative split");
      std::set<Edge> negs;
      for (const auto* list : {&s.negative_edges, &t.negative_edges})
        for (const Edge& e : *list) {
          if (e.first >= e.second || e.first < 0 || e.second >= orig.num_nodes)
            fail("LP negative not canonical");
          if (orig.has_edge(e.first, e.second)) fail("LP negative is an edge");
          if (!negs.insert(e).second) fail("LP duplicate negative");
        }
    }
  }
  return bad;
}

}  // namespace same::testing
