#include "ata/runtime/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace ata::runtime {

using goalnet::Blackboard;
using goalnet::ExecutionContext;
using goalnet::TraceRecord;

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

void merge_into(Blackboard& into, const Blackboard& from) {
  for (const auto& [k, v] : from) into[k] = v;
}

}  // namespace

// Scenario scripts ------------------------------------------------------------

Json ScenarioScript::to_json() const {
  Json events_j = Json::array();
  for (const auto& e : events) {
    Json ej{{"delay", e.delay}, {"event", e.event.event_id}};
    Json payload = e.event.payload;
    if (!payload.empty()) ej["payload"] = payload;
    events_j.push_back(std::move(ej));
  }
  Json initial_j = Json::object();
  for (const auto& [k, v] : initial) initial_j[k] = v;
  return Json{{"format", "scenario/1"},
              {"name", name},
              {"seed", seed},
              {"resources", resources.generic_string()},
              {"auto_practice", auto_practice},
              {"failing_actions", failing_actions},
              {"max_steps", max_steps},
              {"initial_blackboard", initial_j},
              {"events", events_j}};
}

ScenarioScript ScenarioScript::from_json(const Json& j, const std::filesystem::path& base_dir) {
  ScenarioScript s;
  try {
    if (j.value("format", std::string("scenario/1")) != "scenario/1") {
      throw DocumentError("unsupported scenario format '" + j.at("format").get<std::string>() + "'");
    }
    s.name = j.value("name", std::string{});
    s.seed = j.value("seed", std::uint64_t{0});
    std::filesystem::path res = j.value("resources", std::string(".."));
    s.resources = res.is_absolute() || base_dir.empty() ? res : (base_dir / res).lexically_normal();
    s.auto_practice = j.value("auto_practice", false);
    s.failing_actions = j.value("failing_actions", std::set<std::string>{});
    s.max_steps = j.value("max_steps", std::size_t{2000});
    for (const auto& [k, v] : j.value("initial_blackboard", Json::object()).items()) s.initial[k] = v;
    for (const auto& ej : j.value("events", Json::array())) {
      ScriptEntry entry;
      entry.delay = ej.value("delay", 0.0);
      if (!(entry.delay >= 0.0)) throw DocumentError("scenario '" + s.name + "': negative delay");
      entry.event = SimEvent::from_json(ej);
      s.events.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    throw DocumentError("scenario: " + std::string(e.what()));
  }
  return s;
}

ScenarioScript ScenarioScript::load(const std::filesystem::path& path) {
  return from_json(load_json_file(path), path.parent_path());
}

// Lanes -----------------------------------------------------------------------

namespace {

struct Job {
  std::string net;
  Blackboard writes;
};

/// One sub-net execution on a lane.
struct Slot {
  ExecutionContext* ctx = nullptr;
  std::unique_ptr<ExecutionContext> owned;
  bool is_branch = false;
  std::string composite;  // for a branch, the routine state it pursues
  std::string target;     // sub-net being pursued
  bool has_job = false;
  std::int64_t parked_since = -1;

  bool parked() const { return parked_since >= 0; }
};

}  // namespace

/// A logical thread. Runs the oldest runnable slot; a waiting slot stays
/// parked until a message for its net arrives, and new work only starts once
/// every slot is parked.
struct Runtime::Lane {
  std::string name;
  int priority = 0;
  bool enabled = false;

  std::vector<Slot> slots;
  std::deque<Job> jobs;
  std::deque<Job> inbox;

  std::int64_t next = kNever;
  std::size_t seq = 0;
  std::size_t started = 0;

  // Filled by a turn, drained by the conductor.
  std::vector<TraceRecord> out;
  std::vector<std::string> errors;
  bool released_branch = false;

  // Worker thread for the threaded mode.
  std::thread worker;
  std::mutex mu;
  std::condition_variable cv;
  std::function<void()> work;
  bool busy = false;
  bool stop = false;
  std::exception_ptr error;

  Slot* slot_for(std::string_view net) {
    for (auto& s : slots) {
      if (s.target == net) return &s;
    }
    return nullptr;
  }
  bool queued(std::string_view net) const {
    return std::any_of(jobs.begin(), jobs.end(), [&](const Job& j) { return j.net == net; });
  }
  /// Earliest tick at which a parked slot gives up; kNever when none waits.
  std::int64_t deadline(std::int64_t timeout) const {
    std::int64_t d = kNever;
    for (const auto& s : slots) {
      if (s.parked()) d = std::min(d, s.parked_since + timeout);
    }
    return d;
  }
};

Runtime::Lane& Runtime::lane(std::string_view name) {
  for (auto& l : lanes_) {
    if (l->name == name) return *l;
  }
  throw std::logic_error("no lane '" + std::string(name) + "'");
}

Runtime::Runtime(AgentInstance& agent, RuntimeOptions options, Blackboard initial)
    : agent_(agent), options_(options), executor_(agent.resources().nets, agent.registry()) {
  const char* names[] = {"routine", "teachability", "affect"};
  for (int i = 0; i < 3; ++i) {
    auto l = std::make_unique<Lane>();
    l->name = names[i];
    l->priority = i;
    lanes_.push_back(std::move(l));
  }
  Lane& routine = *lanes_[0];
  Slot s;
  s.owned = std::make_unique<ExecutionContext>(goalnet::make_context(agent.resources().nets, agent.routine(), options.seed));
  s.ctx = s.owned.get();
  s.ctx->thread = "routine";
  s.ctx->tick = tick();
  s.ctx->external_branches = true;
  s.ctx->blackboard = std::move(initial);
  s.target = agent.routine();
  s.has_job = true;
  routine.slots.push_back(std::move(s));
  routine.enabled = true;
  routine.next = 0;

  if (options_.mode == Mode::threaded) {
    for (auto& lp : lanes_) {
      Lane* l = lp.get();
      l->worker = std::thread([l] {
        std::unique_lock lk(l->mu);
        while (true) {
          l->cv.wait(lk, [l] { return l->stop || static_cast<bool>(l->work); });
          if (l->stop) return;
          auto w = std::exchange(l->work, nullptr);
          lk.unlock();
          try {
            w();
          } catch (...) {
            l->error = std::current_exception();
          }
          lk.lock();
          l->busy = false;
          l->cv.notify_all();
        }
      });
    }
  }
}

Runtime::~Runtime() {
  for (auto& l : lanes_) {
    if (!l->worker.joinable()) continue;
    {
      std::lock_guard lk(l->mu);
      l->stop = true;
    }
    l->cv.notify_all();
    l->worker.join();
  }
}

void Runtime::on_lane(Lane& l, const std::function<void()>& work) {
  if (options_.mode == Mode::cooperative) {
    work();
    return;
  }
  std::unique_lock lk(l.mu);
  l.work = work;
  l.busy = true;
  l.cv.notify_all();
  l.cv.wait(lk, [&] { return !l.busy; });
  if (l.error) std::rethrow_exception(std::exchange(l.error, nullptr));
}

const ExecutionContext& Runtime::routine_context() const { return *lanes_[0]->slots.front().ctx; }

bool Runtime::completed() const { return executor_.terminal(routine_context()); }

std::vector<std::string> Runtime::waiting(std::string_view lane_name) const {
  std::vector<std::string> out;
  for (const auto& l : lanes_) {
    if (l->name != lane_name) continue;
    for (const auto& s : l->slots) {
      if (s.parked()) out.push_back(s.target + ":" + s.ctx->current_state);
    }
  }
  return out;
}

// Conductor -------------------------------------------------------------------

std::int64_t Runtime::ticks(double s) const { return std::llround(s * options_.ticks_per_second); }

void Runtime::schedule(SimEvent event) {
  const std::int64_t at = std::max(ticks(event.timestamp), now_);
  event.timestamp = seconds(at);
  Pending p{at, event_seq_++, std::move(event)};
  auto pos = std::upper_bound(events_.begin(), events_.end(), p, [](const Pending& a, const Pending& b) {
    return std::tie(a.time, a.seq) < std::tie(b.time, b.seq);
  });
  events_.insert(pos, std::move(p));
}

void Runtime::emit(Lane& l, TraceRecord rec) {
  rec.thread = l.name;
  rec.step = l.seq++;
  rec.timestamp = seconds(now_);
  trace_.push_back(std::move(rec));
  ++steps_;
}

void Runtime::collect_posted(std::int64_t at) {
  for (auto& e : agent_.take_posted()) {
    e.timestamp = seconds(std::max(ticks(e.timestamp), at));
    schedule(std::move(e));
  }
}

void Runtime::attach_branches() {
  ExecutionContext& routine = *lanes_[0]->slots.front().ctx;
  if (attached_ || !routine.forked()) return;
  attached_ = true;
  const auto& nets = agent_.resources().nets;
  for (auto& b : routine.branches) {
    Lane& l = lane(b.thread);
    const std::string composite = b.pending->goal;
    const auto& state = nets.get(routine.current_net()).state(composite);
    Slot s;
    s.ctx = &b;
    s.is_branch = true;
    s.composite = composite;
    s.target = state.sub_net.value_or(routine.current_net());
    b.tick = tick();
    l.slots.insert(l.slots.begin(), std::move(s));
    l.enabled = true;
    l.next = now_ + 1;
  }
}

void Runtime::deliver(SimEvent event) {
  Lane& routine = *lanes_[0];
  const ExecutionContext& rctx = routine_context();
  TraceRecord rec;
  rec.net = rctx.current_net();
  rec.state_from = rec.state_to = rctx.current_state;
  rec.outcome = "event";

  if (event.event_id == "E4" && event.variant().empty() && event.payload.contains("map")) {
    try {
      const auto ds = teach::check_syntax(teach::concept_map_from_json(event.payload.at("map")),
                                          agent_.resources().vocabulary);
      event.payload["variant"] = teach::accepted(ds) ? "clean" : "error";
    } catch (const std::exception&) {
      event.payload["variant"] = "error";
    }
  }

  std::set<std::string> goals;
  try {
    goals = dispatch(event, agent_);
  } catch (const UnknownEvent& e) {
    rec.outcome = "rejected";
    rec.detail = {{"event", event.content()}, {"reason", e.what()}};
    errors_.push_back(e.what());
    emit(routine, std::move(rec));
    return;
  }
  if (event.endurer.empty()) event.endurer = agent_.resources().desirability.at(event.content()).endurer;
  rec.detail = {{"event", event.content()}, {"activated", goals}};
  emit(routine, std::move(rec));

  auto wake = [&](Lane& l) { l.next = std::min(l.next, now_); };
  // A goal already being pursued on the lane is not pursued twice.
  auto activate_once = [&](Lane& l, const std::string& net) {
    if (l.slot_for(net) || l.queued(net)) return;
    l.jobs.push_back({net, {}});
    wake(l);
  };
  // Student input reaches the sub-net waiting for it; with none running it
  // opens a new pursuit.
  auto route = [&](Lane& l, const std::string& net, const Blackboard& writes, const Blackboard& fresh) {
    if (l.slot_for(net)) {
      l.inbox.push_back({net, writes});
    } else if (l.queued(net)) {
      for (auto& j : l.jobs) {
        if (j.net == net) {
          merge_into(j.writes, writes);
          break;
        }
      }
    } else {
      l.jobs.push_back({net, fresh});
    }
    wake(l);
  };

  if (event.event_id == "E1") {
    routine.inbox.push_back({agent_.routine(), {{"routine.user_present", true}}});
    wake(routine);
  }
  for (const auto& g : goals) {
    const std::string net(goal_net(g));
    if (g == kAffectGoal) {
      Lane& l = lane("affect");
      l.jobs.push_back({net, {{"affect.event", event.content()}}});
      wake(l);
    } else if (g == kPracticeGoal) {
      Lane& l = lane("teachability");
      const std::string goal = event.payload.value("goal", agent_.config().performance_goal);
      l.jobs.push_back({net, {{"practice.inquiry", goal}}});
      wake(l);
    } else {
      activate_once(lane("teachability"), net);
    }
  }
  if (event.event_id == "E2") {
    const Blackboard w{{"learn.response", event.variant()}};
    route(lane("teachability"), "learn_from_user", w, w);
  }
  if (event.event_id == "E4") {
    const Blackboard w{{"learn.map_pending", true}, {"learn.event", event.to_json()}};
    Blackboard fresh = w;
    fresh["learn.response"] = "agree";
    route(lane("teachability"), "learn_from_user", w, fresh);
  }
}

void Runtime::turn(Lane& l, bool honour_timeouts) {
  const std::int64_t now = now_;
  const double clock = seconds(now_);
  const std::int64_t timeout = ticks(options_.park_timeout);
  const bool is_routine = l.priority == 0;

  on_lane(l, [&] {
    auto done = [&](const Slot& s) { return s.ctx->finished || executor_.terminal(*s.ctx); };
    auto release = [&](std::size_t i) {
      Slot& s = l.slots[i];
      if (s.is_branch) {
        ExecutionContext& b = *s.ctx;
        if (!b.finished) {
          b.net_stack.resize(b.join_depth);
          b.current_state = s.composite;
          b.pending.reset();
          b.finished = true;
        }
        l.released_branch = true;
      }
      l.slots.erase(l.slots.begin() + static_cast<std::ptrdiff_t>(i));
    };

    while (!l.inbox.empty()) {
      Job msg = std::move(l.inbox.front());
      l.inbox.pop_front();
      if (Slot* s = l.slot_for(msg.net)) {
        merge_into(s->ctx->blackboard, msg.writes);
        s->parked_since = -1;
      } else {
        l.jobs.push_back(std::move(msg));
      }
    }
    // A branch opened by the routine takes the activation that asked for it.
    for (auto& s : l.slots) {
      if (s.has_job) continue;
      auto it = std::find_if(l.jobs.begin(), l.jobs.end(), [&](const Job& j) { return j.net == s.target; });
      if (it == l.jobs.end()) continue;
      merge_into(s.ctx->blackboard, it->writes);
      l.jobs.erase(it);
      s.has_job = true;
      s.parked_since = -1;
    }

    auto pick = std::find_if(l.slots.begin(), l.slots.end(), [](const Slot& s) { return !s.parked(); });
    if (pick == l.slots.end() && !l.jobs.empty()) {
      Job job = std::move(l.jobs.front());
      l.jobs.pop_front();
      Slot s;
      s.owned = std::make_unique<ExecutionContext>(
          goalnet::make_context(agent_.resources().nets, job.net, options_.seed + l.started++));
      s.ctx = s.owned.get();
      s.ctx->thread = l.name;
      s.ctx->tick = tick();
      merge_into(s.ctx->blackboard, job.writes);
      s.target = job.net;
      s.has_job = true;
      l.slots.push_back(std::move(s));
      pick = l.slots.end() - 1;
    }
    if (pick == l.slots.end()) {
      // Everything waits on the student. Give up on the oldest expired wait.
      if (!is_routine && honour_timeouts) {
        for (std::size_t i = 0; i < l.slots.size(); ++i) {
          Slot& s = l.slots[i];
          if (s.parked_since + timeout > now) continue;
          TraceRecord rec;
          rec.net = s.ctx->current_net();
          rec.state_from = rec.state_to = s.ctx->current_state;
          rec.outcome = "timeout";
          rec.detail = {{"waited", seconds(now - s.parked_since)}};
          l.out.push_back(std::move(rec));
          release(i);
          l.next = now + 1;
          return;
        }
      }
      l.next = kNever;
      return;
    }
    if (is_routine && done(*pick)) {
      l.next = kNever;
      return;
    }

    Slot& slot = *pick;
    ExecutionContext& ctx = *slot.ctx;
    const std::size_t before = ctx.trace.size();
    ctx.clock = clock;
    bool failed = false;
    try {
      executor_.step(ctx);
    } catch (const goalnet::NoCandidate&) {
      // Nothing done this tick; let the next slot or job have it.
      slot.parked_since = now;
      l.next = now;
      return;
    } catch (const std::exception& e) {
      l.errors.push_back(l.name + ": " + e.what());
      failed = true;
    }
    for (std::size_t i = before; i < ctx.trace.size(); ++i) l.out.push_back(ctx.trace[i]);
    const auto index = static_cast<std::size_t>(pick - l.slots.begin());
    if (failed) {
      if (ctx.trace.size() == before) {
        TraceRecord rec;
        rec.net = ctx.current_net();
        rec.state_from = rec.state_to = ctx.current_state;
        rec.outcome = "failure";
        rec.detail = {{"reason", l.errors.back()}};
        l.out.push_back(std::move(rec));
      }
      if (!is_routine) release(index);
    } else if (!is_routine && done(slot)) {
      release(index);
    }
    l.next = now + 1;
  });

  for (auto& rec : std::exchange(l.out, {})) emit(l, std::move(rec));
  for (auto& e : std::exchange(l.errors, {})) errors_.push_back(std::move(e));
  if (std::exchange(l.released_branch, false)) {
    Lane& routine = *lanes_[0];
    routine.slots.front().parked_since = -1;
    routine.next = std::min(routine.next, now_ + 1);
  }
  if (is_routine) attach_branches();
  collect_posted(now_ + 1);
}

void Runtime::loop(bool honour_timeouts) {
  const std::int64_t timeout = ticks(options_.park_timeout);
  while (true) {
    if (steps_ >= options_.max_steps) {
      step_limited_ = true;
      return;
    }
    const std::int64_t te = events_.empty() ? kNever : events_.front().time;
    Lane* best = nullptr;
    std::int64_t tb = kNever;
    for (auto& l : lanes_) {
      if (!l->enabled) continue;
      std::int64_t t = l->next;
      if (t == kNever && honour_timeouts && l->priority != 0) t = l->deadline(timeout);
      if (t < tb) {
        tb = t;
        best = l.get();
      }
    }
    if (te != kNever && te <= tb) {
      now_ = std::max(now_, te);
      SimEvent e = std::move(events_.front().event);
      events_.pop_front();
      deliver(std::move(e));
      continue;
    }
    if (best) {
      now_ = std::max(now_, tb);
      turn(*best, honour_timeouts);
      continue;
    }
    if (honour_timeouts && attached_ && !quiescent_sent_) {
      quiescent_sent_ = true;
      Lane& routine = *lanes_[0];
      routine.inbox.push_back({agent_.routine(), {{"routine.quiescent", true}}});
      routine.next = now_ + 1;
      continue;
    }
    return;
  }
}

void Runtime::run_until_idle() { loop(false); }
void Runtime::finish() { loop(true); }

// Scenarios -------------------------------------------------------------------

RunResult run_scenario(const ScenarioScript& script, AgentInstance& agent, Mode mode) {
  RuntimeOptions options;
  options.mode = mode;
  options.max_steps = script.max_steps;
  options.seed = script.seed;
  agent.config().auto_practice = script.auto_practice;
  agent.config().failing_actions = script.failing_actions;
  Runtime rt(agent, options, script.initial);
  double t = 0.0;
  for (const auto& entry : script.events) {
    t += entry.delay;
    SimEvent e = entry.event;
    e.timestamp = t;
    rt.schedule(std::move(e));
  }
  rt.finish();
  RunResult r;
  r.trace = rt.trace();
  r.completed = rt.completed();
  r.step_limited = rt.step_limited();
  r.errors = rt.errors();
  r.final_state = agent.state_json(rt.now());
  return r;
}

RunResult run_scenario(const ScenarioScript& script, Mode mode) {
  auto resources = AgentResources::load(script.resources);
  AgentInstance agent(resources);
  return run_scenario(script, agent, mode);
}

}  // namespace ata::runtime
