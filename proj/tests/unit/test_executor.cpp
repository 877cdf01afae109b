#include <doctest.h>

#include <random>

#include "ata/goalnet/executor.hpp"
#include "support.hpp"

using namespace ata;
using namespace ata::goalnet;

namespace {

NetLibrary builtin() { return load_library_dir(testing::data_dir() / "nets"); }

// Every task of `lib` succeeds; `effects` can patch the blackboard per task.
TaskRegistry stub_registry(const NetLibrary& lib,
                           std::map<std::string, std::function<void(Blackboard&)>> effects = {}) {
  TaskRegistry reg;
  for (const auto& id : lib.ids()) {
    for (const auto& t : lib.get(id).transitions) {
      for (const auto& task : t.tasks) {
        auto fx = effects.count(task) ? effects.at(task) : nullptr;
        reg.add(task, [fx](TaskCall& call) {
          if (fx) fx(call.ctx.blackboard);
          return TaskResult::success();
        });
      }
    }
  }
  return reg;
}

std::vector<std::string> tasks_of(const std::vector<TraceRecord>& trace) {
  std::vector<std::string> out;
  for (const auto& r : trace) {
    if (!r.task.empty()) out.push_back(r.task);
  }
  return out;
}

// Spre/Spost membership, checkable from the trace alone.
void check_membership(const NetLibrary& lib, const std::vector<TraceRecord>& trace) {
  for (const auto& r : trace) {
    if (r.outcome != "advance" && r.outcome != "task") continue;
    const Transition& t = lib.get(r.net).transition(r.transition);
    CHECK(std::find(t.pre.begin(), t.pre.end(), r.state_from) != t.pre.end());
    if (r.outcome == "advance") CHECK(std::find(t.post.begin(), t.post.end(), r.state_to) != t.post.end());
  }
}

}  // namespace

TEST_CASE("learning net: rejection ends through T_8 without saving") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib);
  Executor ex(lib, reg);
  auto trace = ex.run_to_completion("learn_from_user", {}, 0, {{"learn.response", "reject"}});
  CHECK(tasks_of(trace) == std::vector<std::string>{"message_teaching", "check_response", "finish"});
  CHECK(trace.back().transition == "T_8");
  CHECK(trace.back().state_to == "S_e");
  check_membership(lib, trace);
}

TEST_CASE("learning net: agreement and a clean map save knowledge") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib, {{"check_error", [](Blackboard& b) { b["learn.map_clean"] = true; }}});
  Executor ex(lib, reg);
  auto trace = ex.run_to_completion("learn_from_user", {}, 0,
                                    {{"learn.response", "agree"}, {"learn.map_pending", true}});
  CHECK(tasks_of(trace) == std::vector<std::string>{"message_teaching", "check_response", "show_approach",
                                                    "perceive_input", "check_error", "save_knowledge"});
  CHECK(trace.back().state_to == "S_e");
  check_membership(lib, trace);
}

TEST_CASE("learning net: an erroneous map loops back through the alert") {
  NetLibrary lib = builtin();
  int attempts = 0;
  TaskRegistry reg = stub_registry(lib, {{"check_error", [&](Blackboard& b) { b["learn.map_clean"] = ++attempts > 1; }}});
  Executor ex(lib, reg);
  auto trace = ex.run_to_completion("learn_from_user", {}, 0,
                                    {{"learn.response", "agree"}, {"learn.map_pending", true}});
  auto tasks = tasks_of(trace);
  CHECK(std::count(tasks.begin(), tasks.end(), "message_alert") == 1);
  CHECK(std::count(tasks.begin(), tasks.end(), "check_error") == 2);
  CHECK(tasks.back() == "save_knowledge");
  check_membership(lib, trace);
}

TEST_CASE("main routine forks both pursuits and joins at the end") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib, {
      {"check_error", [](Blackboard& b) { b["learn.map_clean"] = true; }},
      {"check_identity", [](Blackboard& b) { b["affect.self_endured"] = true; }},
      {"check_relevance", [](Blackboard& b) { b["affect.prospect_relevant"] = false; }},
  });
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "main_routine");
  ctx.blackboard = {{"routine.user_present", true}, {"routine.quiescent", true}, {"learn.response", "agree"},
                    {"learn.map_pending", true}, {"affect.event", "E1"}};
  ex.run_to_completion(ctx, {});
  const auto& trace = ctx.trace;

  CHECK(trace[0].task == "check_user");
  CHECK(trace[0].state_to == "S_2");
  CHECK(trace[1].outcome == "fork");
  CHECK(trace[1].transition == "T_2,T_3");
  CHECK(trace[1].detail["threads"] == Json::array({"teachability", "affect"}));

  std::set<std::string> entered;
  for (const auto& r : trace) {
    if (r.detail.contains("entered")) entered.insert(r.thread + ":" + r.detail["entered"].get<std::string>());
  }
  CHECK(entered == std::set<std::string>{"teachability:learn_from_user", "affect:be_affective"});
  CHECK(trace.back().transition == "T_4");
  CHECK(trace.back().state_to == "S_e");
  CHECK(ex.terminal(ctx));
  for (std::size_t i = 0; i < trace.size(); ++i) CHECK(trace[i].step == i);
  check_membership(lib, trace);
}

TEST_CASE("join waits for the quiescence trigger") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib, {{"check_identity", [](Blackboard& b) { b["affect.self_endured"] = true; }},
                                         {"check_relevance", [](Blackboard& b) { b["affect.prospect_relevant"] = false; }}});
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "main_routine");
  ctx.blackboard = {{"routine.user_present", true}, {"learn.response", "reject"}, {"affect.event", "E1"}};
  for (int i = 0; i < 100; ++i) {
    try {
      ex.step(ctx);
    } catch (const NoCandidate&) {
      break;
    }
  }
  CHECK(ctx.forked());
  CHECK(std::all_of(ctx.branches.begin(), ctx.branches.end(), [](const auto& b) { return b.finished; }));
  const auto size = ctx.trace.size();
  CHECK_THROWS_AS(ex.step(ctx), NoCandidate);
  CHECK(ctx.trace.size() == size);
  ctx.blackboard["routine.quiescent"] = true;
  ex.step(ctx);
  CHECK(ex.terminal(ctx));
}

TEST_CASE("externally driven branches block the parent until finished") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib);
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "main_routine");
  ctx.external_branches = true;
  ctx.blackboard = {{"routine.user_present", true}};
  ex.step(ctx);
  ex.step(ctx);
  REQUIRE(ctx.branches.size() == 2);
  CHECK_THROWS_AS(ex.step(ctx), NoCandidate);
  ExecutionContext& learn = ctx.branches[0];
  CHECK(learn.thread == "teachability");
  ex.step(learn);
  CHECK(learn.current_net() == "learn_from_user");
  CHECK(learn.net_stack.size() == 2);
}

TEST_CASE("a context sitting at a sub-net end pops as its own step") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib);
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "main_routine");
  ctx.net_stack.push_back(Frame{"practice", "S_3"});
  ctx.current_state = "S_e";
  ex.step(ctx);
  CHECK(ctx.net_stack.size() == 1);
  CHECK(ctx.current_state == "S_3");
  CHECK(ctx.trace.back().outcome == "return");
  CHECK(ctx.trace.back().state_from == "S_e");
}

TEST_CASE("task failure leaves the state unchanged and is traced") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib);
  reg.add("message_teaching", [](TaskCall&) { return TaskResult::failure("speech channel closed"); });
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "learn_from_user");
  CHECK_THROWS_AS(ex.step(ctx), TaskFailure);
  CHECK(ctx.current_state == "S_s");
  REQUIRE(ctx.trace.size() == 1);
  CHECK(ctx.trace[0].outcome == "failure");
  CHECK(ctx.trace[0].detail["reason"] == "speech channel closed");
  CHECK_FALSE(ctx.pending.has_value());
}

TEST_CASE("missing hooks are caught before and during execution") {
  NetLibrary lib = builtin();
  TaskRegistry reg;
  reg.add("message_teaching", [](TaskCall&) { return TaskResult::success(); });
  try {
    reg.check_resolves(lib);
    FAIL("unresolved tasks accepted");
  } catch (const ValidationError& e) {
    CHECK(e.violation() == ValidationError::Violation::unresolved_task);
  }
  Executor ex(lib, reg);
  ExecutionContext ctx = make_context(lib, "learn_from_user");
  ctx.blackboard["learn.response"] = "agree";
  ex.step(ctx);
  CHECK_THROWS_AS(ex.step(ctx), UnresolvedTask);
  CHECK(ctx.trace.size() == 1);
}

TEST_CASE("step limit") {
  GoalNet net = load_goalnet(R"({
    "net": {"id": "loop"},
    "states": [{"id":"S_0","kind":"root"},{"id":"S_s","start":true},{"id":"S_1"},{"id":"S_2"},{"id":"S_e","end":true}],
    "transitions": [
      {"id":"T_1","pre":["S_s"],"post":["S_1"]},
      {"id":"T_2","pre":["S_1"],"post":["S_2"]},
      {"id":"T_3","pre":["S_2"],"post":["S_1"],"trigger":{"key":"stop","op":"absent"}},
      {"id":"T_4","pre":["S_2"],"post":["S_e"],"trigger":{"key":"stop","op":"exists"}}
    ]})");
  NetLibrary lib;
  lib.add(net);
  TaskRegistry reg;
  Executor ex(lib, reg);
  try {
    ex.run_to_completion("loop", {10});
    FAIL("loop terminated");
  } catch (const StepLimitExceeded& e) {
    CHECK(e.trace().size() == 10);
  }
  CHECK(ex.run_to_completion("loop", {10}, 0, {{"stop", true}}).size() == 3);
}

TEST_CASE("select_action strategies") {
  Transition t;
  t.id = "T";
  t.tasks = {"a", "b", "c"};
  ExecutionContext ctx;
  CHECK(select_action(t, ctx, 0) == "a");
  CHECK(select_action(t, ctx, 2) == "c");
  CHECK_FALSE(select_action(t, ctx, 3).has_value());

  t.tasks = {"show_panel", "finish"};
  t.strategy = SelectionStrategy::rule_based;
  t.rules = {{{{"response", Predicate::Op::eq, "agree"}}, "show_panel", {}},
             {{{"response", Predicate::Op::eq, "reject"}}, "finish", {}}};
  ctx.blackboard["response"] = "agree";
  CHECK(select_action(t, ctx, 0) == "show_panel");
  ctx.blackboard["response"] = "reject";
  CHECK(select_action(t, ctx, 0) == "finish");
  ctx.blackboard["response"] = "maybe";
  CHECK_THROWS_AS(select_action(t, ctx, 0), NoRuleFired);

  t.tasks = {"x", "y"};
  t.strategy = SelectionStrategy::probabilistic;
  t.probabilities = {{"x", 0.5}, {"y", 0.5}};
  ctx.rng.reseed(2024);
  int x = 0;
  for (int i = 0; i < 10000; ++i) x += select_action(t, ctx, 0) == "x";
  CHECK(x / 10000.0 >= 0.47);
  CHECK(x / 10000.0 <= 0.53);
}

TEST_CASE("probabilistic draws are reproducible per seed") {
  Transition t;
  t.id = "T";
  t.tasks = {"x", "y", "z"};
  t.strategy = SelectionStrategy::probabilistic;
  t.probabilities = {{"x", 0.2}, {"y", 0.3}, {"z", 0.5}};
  auto draw = [&](std::uint64_t seed) {
    ExecutionContext ctx;
    ctx.rng.reseed(seed);
    std::string s;
    for (int i = 0; i < 64; ++i) s += *select_action(t, ctx, 0);
    return s;
  };
  CHECK(draw(5) == draw(5));
  CHECK(draw(5) != draw(6));
}

TEST_CASE("traces replay byte-identically") {
  NetLibrary lib = builtin();
  TaskRegistry reg = stub_registry(lib, {{"check_error", [](Blackboard& b) { b["learn.map_clean"] = true; }},
                                         {"check_identity", [](Blackboard& b) { b["affect.self_endured"] = false; }},
                                         {"check_will", [](Blackboard& b) { b["affect.will"] = "good_will"; }}});
  Executor ex(lib, reg);
  Blackboard init{{"routine.user_present", true}, {"routine.quiescent", true}, {"learn.response", "agree"},
                  {"learn.map_pending", true}, {"affect.event", "E4"}};
  const std::string a = to_ndjson(ex.run_to_completion("main_routine", {}, 3, init));
  const std::string b = to_ndjson(ex.run_to_completion("main_routine", {}, 3, init));
  CHECK(a == b);
  std::size_t lines = 0;
  std::istringstream in(a);
  for (std::string line; std::getline(in, line); ++lines) {
    auto rec = TraceRecord::from_json(Json::parse(line));
    CHECK(rec.to_json().dump() == line);
  }
  CHECK(lines > 10);
}

// Nets of at most 8 states whose every transition is a rule-chosen branch:
// the end states the executor reaches over all rule assignments must equal
// those reachable in the arc graph.
TEST_CASE("reachable end states agree with graph search") {
  std::mt19937 gen(99);
  for (int round = 0; round < 60; ++round) {
    const int n = 3 + round % 6;
    GoalNet net;
    net.id = "r";
    net.states.push_back({"S_0", "", GoalKind::root});
    for (int i = 1; i <= n; ++i) net.states.push_back({"S_" + std::to_string(i), "", GoalKind::atomic, {}, i == 1, false});
    std::vector<std::vector<int>> succ(n + 1);
    for (int j = 2; j <= n; ++j) succ[std::uniform_int_distribution<int>(1, j - 1)(gen)].push_back(j);
    for (int i = 1; i <= n; ++i) {
      for (int j = i + 1; j <= n; ++j) {
        if (std::bernoulli_distribution(0.3)(gen) && std::find(succ[i].begin(), succ[i].end(), j) == succ[i].end()) succ[i].push_back(j);
      }
    }
    for (int i = 1; i <= n; ++i) {
      if (succ[i].empty()) {
        net.states[i].is_end = true;
        continue;
      }
      Transition t;
      t.id = "T_" + std::to_string(i);
      t.pre = {"S_" + std::to_string(i)};
      t.strategy = SelectionStrategy::rule_based;
      for (int j : succ[i]) {
        const std::string s = "S_" + std::to_string(j);
        t.post.push_back(s);
        t.rules.push_back({{{"pick." + t.id, Predicate::Op::eq, s}}, {}, s});
        net.arcs.push_back({t.pre[0], t.id, s});
      }
      net.transitions.push_back(t);
    }
    validate(net);

    std::set<std::string> graph_ends;
    std::vector<std::string> stack{"S_1"};
    std::set<std::string> seen{"S_1"};
    while (!stack.empty()) {
      auto s = stack.back();
      stack.pop_back();
      if (net.is_end(s)) graph_ends.insert(s);
      for (const auto& a : net.arcs) {
        if (a.from == s && seen.insert(a.to).second) stack.push_back(a.to);
      }
    }

    NetLibrary lib;
    lib.add(net);
    TaskRegistry reg;
    Executor ex(lib, reg);
    std::set<std::string> exec_ends;
    std::vector<std::size_t> choice(net.transitions.size(), 0);
    while (true) {
      Blackboard b;
      for (std::size_t k = 0; k < choice.size(); ++k) {
        b["pick." + net.transitions[k].id] = net.transitions[k].post[choice[k]];
      }
      auto trace = ex.run_to_completion("r", {50}, 0, b);
      exec_ends.insert(trace.back().state_to);
      std::size_t k = 0;
      while (k < choice.size() && ++choice[k] == net.transitions[k].post.size()) choice[k++] = 0;
      if (k == choice.size()) break;
    }
    CHECK(exec_ends == graph_ends);
  }
}
