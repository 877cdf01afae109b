#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ata/goalnet/goal_net.hpp"

namespace ata::goalnet {

struct TraceRecord {
  std::size_t step = 0;
  std::string thread;
  std::string net;
  std::string state_from;
  std::string transition;
  std::string task;
  std::string state_to;
  std::string outcome;
  double timestamp = 0.0;
  Json detail;  // null when there is nothing to add

  Json to_json() const;
  static TraceRecord from_json(const Json& j);
};

/// One JSON object per line.
std::string to_ndjson(const std::vector<TraceRecord>& trace);

struct Frame {
  std::string net;
  /// Composite state in the parent net to resume at; empty for the root frame.
  std::string return_state;
};

/// A transition whose tasks are still being worked through.
struct PendingTransition {
  std::string transition;
  std::string goal;
  std::size_t executed = 0;
  std::string chosen_task;  // rule-based/probabilistic pick, fixed for the run
};

class ExecutionContext {
 public:
  std::string thread = "main";
  std::string current_state;
  std::vector<Frame> net_stack;
  Blackboard blackboard;
  /// Per-state reward overrides; states not listed use the net's value.
  std::map<std::string, double, std::less<>> path_rewards;
  std::vector<TraceRecord> trace;
  Rng rng;
  double clock = 0.0;
  double tick = 0.1;
  std::size_t steps = 0;
  std::optional<PendingTransition> pending;

  /// Branches opened by a fork, in fork-transition order.
  std::vector<ExecutionContext> branches;
  /// Set on a branch once it has returned to its composite state.
  bool finished = false;
  /// Nonzero on a branch: stack depth at which it has returned to its
  /// composite state and is done.
  std::size_t join_depth = 0;
  /// When true the owner drives branches itself (e.g. on separate threads)
  /// and only marks them finished; step() then waits at the join.
  bool external_branches = false;
  std::size_t branch_cursor = 0;

  const std::string& current_net() const { return net_stack.back().net; }
  bool forked() const { return !branches.empty(); }
};

/// Creates a context positioned at the start state of `net_id`.
ExecutionContext make_context(const NetLibrary& library, std::string_view net_id,
                              std::uint64_t seed = 0);

struct TaskResult {
  bool ok = true;
  std::string reason;
  Json detail;

  static TaskResult success(Json detail = nullptr) { return {true, {}, std::move(detail)}; }
  static TaskResult failure(std::string reason) { return {false, std::move(reason), nullptr}; }
};

struct TaskCall {
  ExecutionContext& ctx;
  const GoalNet& net;
  const Transition& transition;
  std::string_view task;
};

using TaskHook = std::function<TaskResult(TaskCall&)>;

class TaskRegistry {
 public:
  void add(std::string name, TaskHook hook);
  bool contains(std::string_view name) const;
  const TaskHook& at(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Throws ValidationError(unresolved_task) naming the first task of any
  /// net in `library` without a hook.
  void check_resolves(const NetLibrary& library) const;

 private:
  std::map<std::string, TaskHook, std::less<>> hooks_;
};

class NoCandidate : public GoalNetError {
 public:
  using GoalNetError::GoalNetError;
};
class NoRuleFired : public GoalNetError {
 public:
  using GoalNetError::GoalNetError;
};
class TaskFailure : public GoalNetError {
 public:
  using GoalNetError::GoalNetError;
};
class UnresolvedTask : public GoalNetError {
 public:
  using GoalNetError::GoalNetError;
};
class StepLimitExceeded : public GoalNetError {
 public:
  StepLimitExceeded(const std::string& message, std::vector<TraceRecord> trace)
      : GoalNetError(message), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// Best summed reward over simple paths from `state_id` to any end state of
/// `net`; -inf when no end state is reachable.
double aggregated_path_reward(const GoalNet& net, std::string_view state_id,
                              const std::map<std::string, double, std::less<>>& overrides);

/// Argmax of aggregated path reward; ties go to the lowest state id.
/// Throws NoCandidate when `candidates` is empty and the context is not at an
/// end state.
std::string select_next_goal(const ExecutionContext& ctx, const GoalNet& net,
                             const std::set<std::string>& candidates);

/// Picks the task to run next on `transition`; nullopt when it has no tasks.
/// `executed` counts tasks of this transition already completed.
std::optional<std::string> select_action(const Transition& transition, ExecutionContext& ctx,
                                         std::size_t executed = 0);

struct Limits {
  std::size_t max_steps = 1000;
};

class Executor {
 public:
  Executor(const NetLibrary& library, const TaskRegistry& registry)
      : library_(library), registry_(registry) {}

  /// One routine tick. Appends exactly one record to ctx.trace, except when it
  /// throws NoCandidate (nothing enabled; the context is left untouched).
  void step(ExecutionContext& ctx) const;

  /// True once ctx sits at an end state of its root-level net.
  bool terminal(const ExecutionContext& ctx) const;

  std::vector<TraceRecord> run_to_completion(std::string_view net_id, Limits limits,
                                             std::uint64_t seed = 0,
                                             Blackboard initial = {}) const;
  void run_to_completion(ExecutionContext& ctx, Limits limits) const;

  const NetLibrary& library() const { return library_; }

 private:
  void step_branches(ExecutionContext& ctx) const;
  void join(ExecutionContext& ctx, const GoalNet& net) const;
  void fork(ExecutionContext& ctx, const GoalNet& net,
            const std::vector<const Transition*>& group) const;
  void enter(ExecutionContext& ctx, const std::string& target, TraceRecord& rec) const;
  TaskResult invoke(ExecutionContext& ctx, const GoalNet& net, const Transition& t,
                    const std::string& task) const;
  TraceRecord begin_record(const ExecutionContext& ctx) const;
  void commit(ExecutionContext& ctx, TraceRecord rec) const;

  const NetLibrary& library_;
  const TaskRegistry& registry_;
};

}  // namespace ata::goalnet
