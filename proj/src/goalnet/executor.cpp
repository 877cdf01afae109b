#include "ata/goalnet/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ata::goalnet {

namespace {

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join_ids(const std::vector<std::string>& parts, char sep = ',') {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

bool has_task_rules(const Transition& t) {
  return std::any_of(t.rules.begin(), t.rules.end(), [](const ChoiceRule& r) { return r.task.has_value(); });
}

// Sequential transitions (and rule tables that only pick a successor) run
// every task; otherwise exactly one task is chosen.
bool runs_every_task(const Transition& t) {
  return t.strategy == SelectionStrategy::sequential ||
         (t.strategy == SelectionStrategy::rule_based && !has_task_rules(t));
}

double best_path(const GoalNet& net, const std::string& state,
                 const std::map<std::string, double, std::less<>>& overrides,
                 std::vector<std::string>& path) {
  auto it = overrides.find(state);
  const double own = it != overrides.end() ? it->second : net.state(state).reward;
  if (net.is_end(state)) return own;
  path.push_back(state);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : net.arcs) {
    if (a.from != state || contains(path, a.to)) continue;
    best = std::max(best, best_path(net, a.to, overrides, path));
  }
  path.pop_back();
  return best + own;
}

}  // namespace

// Trace -------------------------------------------------------------------------

Json TraceRecord::to_json() const {
  Json j{{"step", step},           {"thread", thread},   {"net", net},
         {"state_from", state_from}, {"transition", transition}, {"task", task},
         {"state_to", state_to},   {"outcome", outcome}, {"timestamp", timestamp}};
  if (!detail.is_null()) j["detail"] = detail;
  return j;
}

TraceRecord TraceRecord::from_json(const Json& j) {
  TraceRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.thread = j.value("thread", std::string{});
  r.net = j.at("net").get<std::string>();
  r.state_from = j.at("state_from").get<std::string>();
  r.transition = j.value("transition", std::string{});
  r.task = j.value("task", std::string{});
  r.state_to = j.at("state_to").get<std::string>();
  r.outcome = j.at("outcome").get<std::string>();
  r.timestamp = j.at("timestamp").get<double>();
  r.detail = j.value("detail", Json());
  return r;
}

std::string to_ndjson(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

ExecutionContext make_context(const NetLibrary& library, std::string_view net_id, std::uint64_t seed) {
  const GoalNet& net = library.get(net_id);
  ExecutionContext ctx;
  ctx.net_stack.push_back(Frame{net.id, {}});
  ctx.current_state = net.start().id;
  ctx.rng.reseed(seed);
  return ctx;
}

// Registry ----------------------------------------------------------------------

void TaskRegistry::add(std::string name, TaskHook hook) { hooks_[std::move(name)] = std::move(hook); }

bool TaskRegistry::contains(std::string_view name) const { return hooks_.find(name) != hooks_.end(); }

const TaskHook& TaskRegistry::at(std::string_view name) const {
  auto it = hooks_.find(name);
  if (it == hooks_.end()) throw UnresolvedTask("no hook registered for task '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> TaskRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, hook] : hooks_) out.push_back(name);
  return out;
}

void TaskRegistry::check_resolves(const NetLibrary& library) const {
  for (const auto& id : library.ids()) {
    for (const auto& t : library.get(id).transitions) {
      for (const auto& task : t.tasks) {
        if (!contains(task)) {
          throw ValidationError(ValidationError::Violation::unresolved_task,
                                "net '" + id + "' transition '" + t.id + "' uses unknown task '" + task + "'");
        }
      }
    }
  }
}

// Selection ---------------------------------------------------------------------

double aggregated_path_reward(const GoalNet& net, std::string_view state_id,
                              const std::map<std::string, double, std::less<>>& overrides) {
  std::vector<std::string> path;
  return best_path(net, std::string(state_id), overrides, path);
}

std::string select_next_goal(const ExecutionContext& ctx, const GoalNet& net,
                             const std::set<std::string>& candidates) {
  if (candidates.empty()) {
    throw NoCandidate("no successor goal available from '" + ctx.current_state + "' in '" + net.id + "'");
  }
  std::string best;
  double best_reward = 0.0;
  for (const auto& c : candidates) {
    const double r = aggregated_path_reward(net, c, ctx.path_rewards);
    // Sums that differ only by rounding count as ties.
    const double slack = std::isfinite(best_reward) ? 1e-12 * std::max(1.0, std::abs(best_reward)) : 0.0;
    if (best.empty() || r > best_reward + slack) {
      best = c;
      best_reward = r;
    }
  }
  return best;
}

std::optional<std::string> select_action(const Transition& t, ExecutionContext& ctx, std::size_t executed) {
  if (t.tasks.empty()) return std::nullopt;
  if (runs_every_task(t)) {
    if (executed >= t.tasks.size()) return std::nullopt;
    return t.tasks[executed];
  }
  if (executed > 0) return std::nullopt;
  if (t.strategy == SelectionStrategy::rule_based) {
    for (const auto& r : t.rules) {
      if (r.task && holds(r.when, ctx.blackboard)) return r.task;
    }
    throw NoRuleFired("no task rule of '" + t.id + "' holds");
  }
  const double u = ctx.rng.uniform01();
  double acc = 0.0;
  for (const auto& [task, w] : t.probabilities) {
    acc += w;
    if (u < acc) return task;
  }
  // Rounding left u above the cumulative sum; take the last weighted task.
  for (auto it = t.probabilities.rbegin(); it != t.probabilities.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  return t.probabilities.back().first;
}

// Executor ----------------------------------------------------------------------

bool Executor::terminal(const ExecutionContext& ctx) const {
  return !ctx.forked() && !ctx.pending && ctx.net_stack.size() == 1 &&
         library_.get(ctx.current_net()).is_end(ctx.current_state);
}

TraceRecord Executor::begin_record(const ExecutionContext& ctx) const {
  TraceRecord r;
  r.step = ctx.steps;
  r.thread = ctx.thread;
  r.net = ctx.current_net();
  r.state_from = ctx.current_state;
  r.state_to = ctx.current_state;
  r.timestamp = ctx.clock;
  return r;
}

void Executor::commit(ExecutionContext& ctx, TraceRecord rec) const {
  ctx.trace.push_back(std::move(rec));
  ++ctx.steps;
  ctx.clock += ctx.tick;
}

TaskResult Executor::invoke(ExecutionContext& ctx, const GoalNet& net, const Transition& t,
                            const std::string& task) const {
  const TaskHook& hook = registry_.at(task);
  TaskCall call{ctx, net, t, task};
  return hook(call);
}

void Executor::enter(ExecutionContext& ctx, const std::string& target, TraceRecord& rec) const {
  const GoalNet& net = library_.get(ctx.current_net());
  const GoalState& s = net.state(target);
  ctx.current_state = target;
  rec.state_to = target;
  if (s.kind == GoalKind::composite) {
    const GoalNet& sub = library_.get(*s.sub_net);
    ctx.net_stack.push_back(Frame{sub.id, target});
    ctx.current_state = sub.start().id;
    rec.detail["entered"] = sub.id;
  } else if (s.is_end && ctx.net_stack.size() > 1) {
    // Sub-net finished: resume at the composite state in the parent.
    const std::string back = ctx.net_stack.back().return_state;
    ctx.net_stack.pop_back();
    ctx.current_state = back;
    rec.detail["returned_to"] = back;
  }
  if (ctx.join_depth > 0 && ctx.net_stack.size() == ctx.join_depth) ctx.finished = true;
}

void Executor::fork(ExecutionContext& ctx, const GoalNet& net,
                    const std::vector<const Transition*>& group) const {
  TraceRecord rec = begin_record(ctx);
  std::vector<std::string> ids, targets;
  for (const auto* t : group) {
    ExecutionContext child;
    child.thread = t->thread.value_or(ctx.thread + "/" + t->id);
    child.net_stack = ctx.net_stack;
    child.current_state = ctx.current_state;
    child.blackboard = ctx.blackboard;
    child.rng.reseed(ctx.rng.next());
    child.clock = ctx.clock + ctx.tick;
    child.tick = ctx.tick;
    child.join_depth = ctx.net_stack.size();
    child.pending = PendingTransition{t->id, t->post.front(), 0, {}};
    ctx.branches.push_back(std::move(child));
    ids.push_back(t->id);
    targets.push_back(t->post.front());
  }
  rec.transition = join_ids(ids);
  rec.state_to = join_ids(targets);
  rec.outcome = "fork";
  rec.detail = {{"fork_group", *group.front()->fork_group}};
  for (const auto& b : ctx.branches) rec.detail["threads"].push_back(b.thread);
  (void)net;
  commit(ctx, std::move(rec));
}

void Executor::join(ExecutionContext& ctx, const GoalNet& net) const {
  std::vector<std::string> arrived;
  for (const auto& b : ctx.branches) arrived.push_back(b.current_state);
  for (const auto& t : net.transitions) {
    const bool covers = std::all_of(arrived.begin(), arrived.end(),
                                    [&](const std::string& s) { return contains(t.pre, s); });
    if (!covers || !holds(t.trigger, ctx.blackboard)) continue;
    std::set<std::string> posts(t.post.begin(), t.post.end());
    ctx.current_state = arrived.front();
    ctx.pending = PendingTransition{t.id, select_next_goal(ctx, net, posts), 0, {}};
    ctx.branches.clear();
    ctx.branch_cursor = 0;
    return;
  }
  throw NoCandidate("branches of '" + net.id + "' finished but no join transition is enabled");
}

void Executor::step_branches(ExecutionContext& ctx) const {
  const std::size_t n = ctx.branches.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (ctx.branch_cursor + k) % n;
    ExecutionContext& child = ctx.branches[i];
    if (child.finished) continue;
    const std::size_t before = child.trace.size();
    child.clock = ctx.clock;
    auto adopt = [&] {
      if (child.trace.size() == before) return;
      TraceRecord rec = child.trace.back();
      rec.step = ctx.steps;
      commit(ctx, std::move(rec));
      ctx.branch_cursor = (i + 1) % n;
    };
    try {
      step(child);
    } catch (const NoCandidate&) {
      continue;
    } catch (...) {
      adopt();
      throw;
    }
    adopt();
    return;
  }
  throw NoCandidate("every branch of '" + ctx.current_net() + "' is waiting");
}

void Executor::step(ExecutionContext& ctx) const {
  if (ctx.finished) throw NoCandidate("branch '" + ctx.thread + "' already finished");

  if (ctx.forked()) {
    const bool all_done = std::all_of(ctx.branches.begin(), ctx.branches.end(),
                                      [](const ExecutionContext& b) { return b.finished; });
    if (!all_done) {
      if (ctx.external_branches) throw NoCandidate("waiting for branches of '" + ctx.thread + "'");
      step_branches(ctx);
      return;
    }
    join(ctx, library_.get(ctx.current_net()));
  }

  const GoalNet& net = library_.get(ctx.current_net());

  if (!ctx.pending) {
    if (net.is_end(ctx.current_state)) {
      if (ctx.net_stack.size() == 1) throw NoCandidate("'" + net.id + "' already reached an end state");
      TraceRecord rec = begin_record(ctx);
      rec.outcome = "return";
      const std::string back = ctx.net_stack.back().return_state;
      ctx.net_stack.pop_back();
      ctx.current_state = back;
      rec.state_to = back;
      rec.detail["returned_to"] = back;
      if (ctx.join_depth > 0 && ctx.net_stack.size() == ctx.join_depth) ctx.finished = true;
      commit(ctx, std::move(rec));
      return;
    }

    std::vector<const Transition*> enabled;
    for (const auto* t : net.outgoing(ctx.current_state)) {
      if (holds(t->trigger, ctx.blackboard)) enabled.push_back(t);
    }
    auto forking = std::find_if(enabled.begin(), enabled.end(),
                                [](const Transition* t) { return t->fork_group.has_value(); });
    if (forking != enabled.end()) {
      std::vector<const Transition*> group;
      for (const auto* t : enabled) {
        if (t->fork_group == (*forking)->fork_group) group.push_back(t);
      }
      fork(ctx, net, group);
      return;
    }

    std::set<std::string> candidates;
    for (const auto* t : enabled) candidates.insert(t->post.begin(), t->post.end());
    const std::string goal = select_next_goal(ctx, net, candidates);
    const Transition* chosen = nullptr;
    for (const auto* t : enabled) {
      if (contains(t->post, goal) && (chosen == nullptr || t->id < chosen->id)) chosen = t;
    }
    ctx.pending = PendingTransition{chosen->id, goal, 0, {}};
  }

  PendingTransition& p = *ctx.pending;
  const Transition& t = net.transition(p.transition);
  TraceRecord rec = begin_record(ctx);
  rec.transition = t.id;

  std::optional<std::string> task;
  try {
    task = select_action(t, ctx, p.executed);
  } catch (const NoRuleFired&) {
    ctx.pending.reset();
    rec.outcome = "no_rule";
    commit(ctx, std::move(rec));
    throw;
  }
  if (task) {
    if (!registry_.contains(*task)) {
      throw UnresolvedTask("net '" + net.id + "' transition '" + t.id + "' uses unknown task '" + *task + "'");
    }
    rec.task = *task;
    const TaskResult result = invoke(ctx, net, t, *task);
    if (!result.detail.is_null()) rec.detail = result.detail;
    if (!result.ok) {
      ctx.pending.reset();
      rec.outcome = "failure";
      rec.detail["reason"] = result.reason;
      commit(ctx, std::move(rec));
      throw TaskFailure("task '" + *task + "' of '" + t.id + "' failed: " + result.reason);
    }
    ++ctx.pending->executed;
    if (select_action(t, ctx, ctx.pending->executed)) {
      rec.outcome = "task";
      commit(ctx, std::move(rec));
      return;
    }
  }

  std::string target = ctx.pending->goal;
  if (t.has_branch_rules()) {
    const ChoiceRule* fired = nullptr;
    for (const auto& r : t.rules) {
      if (r.post && holds(r.when, ctx.blackboard)) {
        fired = &r;
        break;
      }
    }
    if (fired == nullptr) {
      ctx.pending.reset();
      rec.outcome = "no_rule";
      commit(ctx, std::move(rec));
      throw NoRuleFired("no successor rule of '" + t.id + "' holds");
    }
    target = *fired->post;
  }
  ctx.pending.reset();
  rec.outcome = "advance";
  enter(ctx, target, rec);
  commit(ctx, std::move(rec));
}

void Executor::run_to_completion(ExecutionContext& ctx, Limits limits) const {
  while (!terminal(ctx)) {
    if (ctx.steps >= limits.max_steps) {
      throw StepLimitExceeded("step limit of " + std::to_string(limits.max_steps) + " reached", ctx.trace);
    }
    step(ctx);
  }
}

std::vector<TraceRecord> Executor::run_to_completion(std::string_view net_id, Limits limits,
                                                     std::uint64_t seed, Blackboard initial) const {
  ExecutionContext ctx = make_context(library_, net_id, seed);
  ctx.blackboard = std::move(initial);
  run_to_completion(ctx, limits);
  return std::move(ctx.trace);
}

}  // namespace ata::goalnet
