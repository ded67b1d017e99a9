#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "same/episodes.hpp"
#include "same/errors.hpp"
#include "test_support.hpp"

using namespace same;

namespace {

std::vector<Graph> random_graphs(std::mt19937_64& rng, int count, int min_n = 4, int max_n = 14) {
  std::uniform_int_distribution<int> size(min_n, max_n);
  std::vector<Graph> out;
  for (int i = 0; i < count; ++i) out.push_back(testing::random_graph(rng, size(rng), 3, 0.35, 3, 2));
  return out;
}

std::vector<const Graph*> pointers(const std::vector<Graph>& graphs) {
  std::vector<const Graph*> out;
  for (const auto& g : graphs) out.push_back(&g);
  return out;
}

Graph path_graph(int n) {
  Graph g;
  g.num_nodes = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  g.node_features = Tensor::Zero(n, 1);
  return g;
}

}  // namespace

TEST_CASE("count rules") {
  CHECK(gc_support_count(10) == 6);
  CHECK(gc_support_count(2) == 1);
  CHECK(gc_support_count(3) == 2);
  CHECK(nc_labelled_count(20) == 6);
  CHECK(nc_labelled_count(2) == 1);
  CHECK(nc_labelled_count(5) == 2);  // round(1.5) = 2
  CHECK(lp_removed_count(10) == 2);
  CHECK(lp_removed_count(4) == 1);
  CHECK(lp_target_negative_count(10) == 2);
  CHECK(lp_target_negative_count(3) == 1);
  CHECK(lp_target_negative_count(1) == 0);
}

TEST_CASE("pools: equal split with remainder to GC then NC") {
  std::mt19937_64 rng(1);
  const auto graphs = random_graphs(rng, 32);
  const auto ptrs = pointers(graphs);
  for (auto [n, expect] : std::vector<std::pair<std::size_t, std::array<std::size_t, 3>>>{
           {30, {10, 10, 10}}, {31, {11, 10, 10}}, {32, {11, 11, 10}}}) {
    const auto ep = build_episode(std::span(ptrs).first(n), {}, rng);
    for (std::size_t t = 0; t < 3; ++t) CHECK(ep.pools[t].size() == expect[t]);
  }
  const auto single = build_episode(std::span(ptrs).first(30), {}, rng, TaskSet{Task::kNC});
  CHECK(single.pools[1].size() == 30);
  CHECK(single.pools[0].empty());
  const auto pair = build_episode(std::span(ptrs).first(30), {}, rng, TaskSet{Task::kGC, Task::kLP});
  CHECK(pair.pools[0].size() == 15);
  CHECK(pair.pools[2].size() == 15);
  CHECK_THROWS_AS(build_episode(std::span(ptrs).first(2), {}, rng), ArgumentError);
}

TEST_CASE("GC 60/40, NC 6/14 and LP 2/8 examples") {
  std::mt19937_64 rng(2);
  std::vector<Graph> graphs = random_graphs(rng, 10);
  auto gc = build_episode(pointers(graphs), {}, rng, TaskSet{Task::kGC});
  CHECK(gc.support.gc.size() == 6);
  CHECK(gc.target.gc.size() == 4);

  Graph big = testing::random_graph(rng, 20, 3, 0.3, 3, 2);
  auto nodes = split_nodes(big, rng);
  REQUIRE(nodes);
  CHECK(nodes->first.labelled_nodes.size() == 6);
  CHECK(nodes->second.labelled_nodes.size() == 14);

  Graph ten = path_graph(11);  // 10 edges, 45 non-edges
  auto links = split_links(ten, rng);
  REQUIRE(links);
  CHECK(links->target.positive_edges.size() == 2);
  CHECK(links->support.graph.edges.size() == 8);
  CHECK(links->support.negative_edges.size() == 8);
  CHECK(links->target.negative_edges.size() == 2);
}

TEST_CASE("per-class round robin") {
  std::mt19937_64 rng(3);
  const std::vector<std::vector<int>> classes = {{0, 1, 2, 3, 4}, {5, 6, 7}};
  for (int trial = 0; trial < 50; ++trial) {
    auto two = per_class_round_robin(classes, 2, rng);
    CHECK(((two[0] < 5) != (two[1] < 5)));
  }
  auto all = per_class_round_robin(classes, 8, rng);
  CHECK(std::set<int>(all.begin(), all.end()).size() == 8);
  std::vector<std::string> warnings;
  CHECK(per_class_round_robin(classes, 9, rng, &warnings).size() == 8);
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(per_class_round_robin(classes, 0, rng), ArgumentError);

  // Brute force: every prefix of the selection is balanced up to exhaustion.
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> k(1, 5), nclass(1, 4);
    std::vector<std::vector<int>> cls(static_cast<std::size_t>(nclass(rng)));
    int next = 0;
    for (auto& c : cls)
      for (int i = k(rng); i > 0; --i) c.push_back(next++);
    for (int quota = 1; quota <= next; ++quota) {
      auto pick = per_class_round_robin(cls, static_cast<std::size_t>(quota), rng);
      CHECK(pick.size() == static_cast<std::size_t>(quota));
      std::map<std::size_t, int> got;
      for (int v : pick)
        for (std::size_t c = 0; c < cls.size(); ++c)
          if (std::find(cls[c].begin(), cls[c].end(), v) != cls[c].end()) ++got[c];
      int lo = 1 << 20, hi = 0;
      for (std::size_t c = 0; c < cls.size(); ++c) {
        hi = std::max(hi, got[c]);
        if (got[c] < static_cast<int>(cls[c].size())) lo = std::min(lo, got[c]);
      }
      if (lo != 1 << 20) CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("negative sampling") {
  std::mt19937_64 rng(4);
  Graph complete;
  complete.num_nodes = 4;
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v) complete.edges.emplace_back(u, v);
  CHECK(sample_negative_edges(complete, 5, rng).empty());
  CHECK(sample_negative_edges(path_graph(3), 5, rng) == std::vector<Edge>{{0, 2}});

  const Graph g = testing::random_graph(rng, 12, 1, 0.4, 1, 1);
  for (int trial = 0; trial < 10000; ++trial)
    for (const Edge& e : sample_negative_edges(g, 3, rng)) {
      CHECK_FALSE(g.has_edge(e.first, e.second));
      CHECK(e.first < e.second);
    }
}

TEST_CASE("small graphs are skipped with warnings") {
  std::mt19937_64 rng(5);
  std::vector<Graph> graphs(3, path_graph(2));  // 1 edge each
  for (auto& g : graphs) g.node_labels = {0, 1};
  const auto ep = build_episode(pointers(graphs), {}, rng);
  CHECK(ep.support.lp.empty());
  CHECK_FALSE(ep.has(Task::kLP));
  CHECK_FALSE(ep.warnings.empty());
  CHECK(ep.has(Task::kNC));
}

TEST_CASE("episodes satisfy every invariant and are deterministic") {
  std::mt19937_64 rng(6);
  const auto graphs = random_graphs(rng, 40, 2, 12);
  const auto ptrs = pointers(graphs);
  const std::vector<TaskSet> task_sets = {TaskSet::all(), TaskSet{Task::kGC, Task::kNC},
                                          TaskSet{Task::kNC, Task::kLP}, TaskSet{Task::kLP}};
  std::uniform_int_distribution<int> bs(3, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const TaskSet& ts = task_sets[static_cast<std::size_t>(trial) % task_sets.size()];
    auto batch = ptrs;
    std::shuffle(batch.begin(), batch.end(), rng);
    batch.resize(static_cast<std::size_t>(bs(rng)));
    const auto ep = build_episode(batch, {}, rng, ts);
    const auto bad = testing::episode_violations(ep, batch, ts);
    CHECK_MESSAGE(bad.empty(), (bad.empty() ? "" : bad.front()));
  }
  std::mt19937_64 a(9), b(9);
  CHECK(dump_episode(build_episode(ptrs, {}, a), ptrs) == dump_episode(build_episode(ptrs, {}, b), ptrs));
}

TEST_CASE("dump lists pools and splits") {
  std::mt19937_64 rng(7);
  const auto graphs = random_graphs(rng, 6, 5, 8);
  const auto ptrs = pointers(graphs);
  const std::string dump = dump_episode(build_episode(ptrs, {}, rng), ptrs);
  CHECK(dump.find("pool gc") != std::string::npos);
  CHECK(dump.find("nc graph") != std::string::npos);
  CHECK(dump.find("target+[") != std::string::npos);
}
