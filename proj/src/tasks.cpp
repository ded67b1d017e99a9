#include "same/tasks.hpp"

#include <algorithm>
#include <cctype>

#include "same/errors.hpp"

namespace same {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kGC: return "gc";
    case Task::kNC: return "nc";
    case Task::kLP: return "lp";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gc") return Task::kGC;
  if (lower == "nc") return Task::kNC;
  if (lower == "lp") return Task::kLP;
  return std::nullopt;
}

TaskSet::TaskSet(std::initializer_list<Task> tasks) {
  for (Task t : tasks) insert(t);
}

TaskSet TaskSet::parse(std::string_view text) {
  TaskSet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of(",+", start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      auto task = parse_task(token);
      if (!task) throw ArgumentError("unknown task '" + std::string(token) + "'");
      set.insert(*task);
    }
    start = end + 1;
  }
  if (set.empty()) throw ArgumentError("empty task set '" + std::string(text) + "'");
  return set;
}

std::size_t TaskSet::size() const {
  std::size_t n = 0;
  for (Task t : kAllTasks) n += contains(t);
  return n;
}

std::vector<Task> TaskSet::tasks() const {
  std::vector<Task> out;
  for (Task t : kAllTasks)
    if (contains(t)) out.push_back(t);
  return out;
}

std::string TaskSet::label() const {
  std::string s;
  for (Task t : tasks()) {
    if (!s.empty()) s += '+';
    s += to_string(t);
  }
  return s;
}

}  // namespace same
