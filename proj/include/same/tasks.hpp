#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "same/graph.hpp"

namespace same {

/// The three tasks, in the fixed order used by every training loop.
enum class Task { kGC = 0, kNC = 1, kLP = 2 };

inline constexpr std::array<Task, 3> kAllTasks = {Task::kGC, Task::kNC, Task::kLP};

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);

/// Small ordered subset of {GC, NC, LP}.
class TaskSet {
 public:
  TaskSet() = default;
  TaskSet(std::initializer_list<Task> tasks);
  static TaskSet all() { return {Task::kGC, Task::kNC, Task::kLP}; }
  /// Parses "gc,nc,lp" (any order, case-insensitive). Throws ArgumentError.
  static TaskSet parse(std::string_view text);

  bool contains(Task t) const { return bits_ & bit(t); }
  void insert(Task t) { bits_ |= bit(t); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  /// Member tasks in GC, NC, LP order.
  std::vector<Task> tasks() const;
  /// "gc+nc" style label.
  std::string label() const;
  bool operator==(const TaskSet&) const = default;

 private:
  static unsigned bit(Task t) { return 1u << static_cast<unsigned>(t); }
  unsigned bits_ = 0;
};

/// Node-classification instance: supervision on `labelled_nodes` of `graph`.
struct NCInstance {
  const Graph* graph = nullptr;
  std::vector<int> labelled_nodes;
};

/// Link-prediction instance. `graph` holds only the message-passing edges;
/// positives and negatives are scored pairs in canonical (u < v) order.
struct LPInstance {
  Graph graph;
  std::vector<Edge> positive_edges;
  std::vector<Edge> negative_edges;
};

/// Per-task loss balancing weights.
struct TaskWeights {
  double gc = 1.0, nc = 1.0, lp = 1.0;
  double operator[](Task t) const {
    return t == Task::kGC ? gc : t == Task::kNC ? nc : lp;
  }
};

}  // namespace same
