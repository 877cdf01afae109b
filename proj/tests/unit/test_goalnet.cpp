#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ata/goalnet/executor.hpp"
#include "ata/goalnet/goal_net.hpp"
#include "support.hpp"

using namespace ata;
using namespace ata::goalnet;

namespace {

Json tiny_net() {
  return Json::parse(R"({
    "format": "goalnet/1",
    "net": {"id": "tiny"},
    "states": [
      {"id": "S_0", "kind": "root"},
      {"id": "S_s", "start": true},
      {"id": "S_1"},
      {"id": "S_e", "end": true}
    ],
    "transitions": [
      {"id": "T_1", "tasks": ["a"], "pre": ["S_s"], "post": ["S_1"]},
      {"id": "T_2", "tasks": ["b"], "pre": ["S_1"], "post": ["S_e"]}
    ]
  })");
}

ValidationError::Violation violation_of(const Json& doc) {
  try {
    validate(goalnet_from_json(doc));
  } catch (const ValidationError& e) {
    return e.violation();
  }
  FAIL("document validated");
  return ValidationError::Violation::duplicate_id;
}

}  // namespace

TEST_CASE("built-in nets load and validate as one library") {
  NetLibrary lib = load_library_dir(testing::data_dir() / "nets");
  auto ids = lib.ids();
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<std::string>{"be_affective", "learn_from_user", "main_routine", "practice"});

  const GoalNet& main = lib.get("main_routine");
  CHECK(main.states.size() == 7);
  CHECK(main.transitions.size() == 4);
  CHECK(main.root().id == "S_0");
  CHECK(main.root().description == "To Execute the Main Routine of TA");
  CHECK(main.state("S_3").kind == GoalKind::composite);
  CHECK(*main.state("S_4").sub_net == "be_affective");
  CHECK(lib.branch_depth("main_routine") == 2);

  CHECK(lib.get("learn_from_user").transitions.size() == 8);
  CHECK(lib.get("practice").transitions.size() == 6);
  CHECK(lib.get("be_affective").states.size() == 12);
  CHECK(lib.get("be_affective").transition("T_6").pre.size() == 4);
}

TEST_CASE("serialization is a fixed point") {
  NetLibrary lib = load_library_dir(testing::data_dir() / "nets");
  for (const auto& id : lib.ids()) {
    const std::string once = serialize(lib.get(id));
    const std::string twice = serialize(load_goalnet(once));
    CHECK(once == twice);
  }
  const std::string bundle = serialize_bundle(lib);
  CHECK(serialize_bundle(load_goalnet_bundle(bundle)) == bundle);
}

TEST_CASE("arcs are derived from pre and post sets when omitted") {
  GoalNet net = goalnet_from_json(tiny_net());
  CHECK(net.arcs.size() == 2);
  CHECK(net.arcs[0] == Arc{"S_s", "T_1", "S_1"});
  validate(net);
}

TEST_CASE("structural violations are reported by kind") {
  using V = ValidationError::Violation;

  SUBCASE("undeclared post state") {
    Json doc = tiny_net();
    doc["transitions"][1]["post"] = {"S_9"};
    CHECK(violation_of(doc) == V::dangling_arc);
  }
  SUBCASE("arc disagreeing with its transition") {
    Json doc = tiny_net();
    doc["arcs"] = Json::array({{{"from", "S_s"}, {"transition", "T_1"}, {"to", "S_e"}}});
    CHECK(violation_of(doc) == V::dangling_arc);
  }
  SUBCASE("no start") {
    Json doc = tiny_net();
    doc["states"][1].erase("start");
    CHECK(violation_of(doc) == V::missing_start);
  }
  SUBCASE("two roots") {
    Json doc = tiny_net();
    doc["states"][2]["kind"] = "root";
    CHECK(violation_of(doc) == V::missing_root);
  }
  SUBCASE("no end") {
    Json doc = tiny_net();
    doc["states"][3].erase("end");
    doc["transitions"][1]["post"] = {"S_1"};
    CHECK(violation_of(doc) == V::missing_end);
  }
  SUBCASE("duplicate state id") {
    Json doc = tiny_net();
    doc["states"][2]["id"] = "S_s";
    CHECK(violation_of(doc) == V::duplicate_id);
  }
  SUBCASE("empty post set") {
    Json doc = tiny_net();
    doc["transitions"][0]["post"] = Json::array();
    CHECK(violation_of(doc) == V::empty_endpoint);
  }
  SUBCASE("composite without sub-net") {
    Json doc = tiny_net();
    doc["states"][2]["kind"] = "composite";
    CHECK(violation_of(doc) == V::composite_mismatch);
  }
  SUBCASE("probabilities off by more than tolerance") {
    Json doc = tiny_net();
    doc["transitions"][0]["tasks"] = {"a", "b"};
    doc["transitions"][0]["strategy"] = "probabilistic";
    doc["transitions"][0]["probabilities"] = Json::parse(R"([{"task":"a","weight":0.5},{"task":"b","weight":0.5000001}])");
    CHECK(violation_of(doc) == V::probability_sum);
    doc["transitions"][0]["probabilities"][1]["weight"] = 0.5 + 1e-12;
    CHECK_NOTHROW(validate(goalnet_from_json(doc)));
  }
  SUBCASE("unreachable state") {
    Json doc = tiny_net();
    doc["states"].push_back({{"id", "S_9"}});
    CHECK(violation_of(doc) == V::unreachable_state);
  }
  SUBCASE("leaving an end state") {
    Json doc = tiny_net();
    doc["transitions"].push_back(Json::parse(R"({"id":"T_3","pre":["S_e"],"post":["S_1"]})"));
    CHECK(violation_of(doc) == V::terminal_exit);
  }
  SUBCASE("two unguarded transitions from one state") {
    Json doc = tiny_net();
    doc["transitions"].push_back(Json::parse(R"({"id":"T_3","pre":["S_s"],"post":["S_e"]})"));
    CHECK(violation_of(doc) == V::ambiguous_transitions);
    doc["transitions"][0]["trigger"] = Json::parse(R"([{"key":"x","op":"eq","value":1}])");
    doc["transitions"][2]["trigger"] = Json::parse(R"([{"key":"x","op":"eq","value":2}])");
    CHECK_NOTHROW(validate(goalnet_from_json(doc)));
  }
  SUBCASE("rule naming a foreign successor") {
    Json doc = tiny_net();
    doc["transitions"][0]["strategy"] = "rule_based";
    doc["transitions"][0]["rules"] = Json::parse(R"([{"when":[],"post":"S_e"}])");
    CHECK(violation_of(doc) == V::rule_table);
  }
}

TEST_CASE("malformed documents raise ParseError") {
  CHECK_THROWS_AS(load_goalnet("{not json"), ParseError);
  CHECK_THROWS_AS(load_goalnet(R"({"states": []})"), ParseError);
  Json doc = tiny_net();
  doc["format"] = "goalnet/0";
  CHECK_THROWS_AS(goalnet_from_json(doc), ParseError);
  doc = tiny_net();
  doc["transitions"][0]["strategy"] = "greedy";
  CHECK_THROWS_AS(goalnet_from_json(doc), ParseError);
}

TEST_CASE("branch cycles across nets are rejected") {
  // main's S_3 expands into sub, whose composite expands back into main.
  const char* bundle = R"({"nets": [
    {"net": {"id": "main"},
     "states": [{"id":"S_0","kind":"root"},{"id":"S_s","start":true},
                {"id":"S_3","kind":"composite","sub_net":"sub"},{"id":"S_e","end":true}],
     "transitions": [{"id":"T_1","pre":["S_s"],"post":["S_3"]},{"id":"T_2","pre":["S_3"],"post":["S_e"]}],
     "branches": [{"state":"S_3","net":"sub"}]},
    {"net": {"id": "sub"},
     "states": [{"id":"S_0","kind":"root"},{"id":"S_s","start":true},
                {"id":"S_1","kind":"composite","sub_net":"main"},{"id":"S_e","end":true}],
     "transitions": [{"id":"T_1","pre":["S_s"],"post":["S_1"]},{"id":"T_2","pre":["S_1"],"post":["S_e"]}],
     "branches": [{"state":"S_1","net":"main"}]}
  ]})";
  try {
    load_goalnet_bundle(bundle);
    FAIL("cycle accepted");
  } catch (const ValidationError& e) {
    CHECK(e.violation() == ValidationError::Violation::cyclic_branch);
  }

  std::string dangling = bundle;
  dangling.replace(dangling.rfind("\"main\"}]"), 6, "\"nowhere\"");
  dangling.replace(dangling.rfind("\"sub_net\":\"main\""), 16, "\"sub_net\":\"nowhere\"");
  try {
    load_goalnet_bundle(dangling);
    FAIL("unknown branch target accepted");
  } catch (const ValidationError& e) {
    CHECK(e.violation() == ValidationError::Violation::unknown_net);
  }
}

TEST_CASE("predicates") {
  Blackboard b{{"n", 3}, {"s", "agree"}, {"z", nullptr}};
  auto p = [](const char* text) {
    return goalnet_from_json(Json::parse(std::string(R"({"net":{"id":"x"},"states":[],"transitions":[{"id":"t","pre":["a"],"post":["b"],"trigger":)") + text + "}]}"))
        .transitions[0]
        .trigger;
  };
  CHECK(holds(p(R"({"key":"s","op":"eq","value":"agree"})"), b));
  CHECK_FALSE(holds(p(R"({"key":"s","op":"eq","value":"reject"})"), b));
  CHECK(holds(p(R"({"key":"missing","op":"ne","value":1})"), b));
  CHECK(holds(p(R"({"key":"z","op":"absent"})"), b));
  CHECK(holds(p(R"([{"key":"n","op":"gt","value":2},{"key":"n","op":"le","value":3}])"), b));
  CHECK_FALSE(holds(p(R"({"key":"s","op":"lt","value":2})"), b));
  CHECK(holds(Condition{}, b));
}

// Selection -------------------------------------------------------------------

namespace {

GoalNet chain_with_rewards(std::map<std::string, double> rewards) {
  GoalNet net;
  net.id = "chain";
  net.states.push_back({"S_0", "", GoalKind::root});
  net.states.push_back({"S_s", "", GoalKind::atomic, {}, true, false});
  for (const auto& [id, r] : rewards) net.states.push_back({id, "", GoalKind::atomic, {}, false, false, r});
  net.states.push_back({"S_e", "", GoalKind::atomic, {}, false, true});
  return net;
}

// Reference: enumerate every simple path explicitly and keep the best sum.
double brute_force_reward(const GoalNet& net, const std::string& from) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::string>> stack{{from}};
  while (!stack.empty()) {
    auto path = stack.back();
    stack.pop_back();
    if (net.is_end(path.back())) {
      double sum = 0;
      for (const auto& s : path) sum += net.state(s).reward;
      best = std::max(best, sum);
      continue;
    }
    for (const auto& a : net.arcs) {
      if (a.from == path.back() && std::find(path.begin(), path.end(), a.to) == path.end()) {
        auto next = path;
        next.push_back(a.to);
        stack.push_back(next);
      }
    }
  }
  return best;
}

GoalNet random_dag(std::mt19937& gen, int n) {
  GoalNet net;
  net.id = "rand";
  net.states.push_back({"S_0", "", GoalKind::root});
  std::uniform_real_distribution<double> reward(0.0, 2.0);
  for (int i = 0; i < n; ++i) {
    GoalState s{"S_" + std::to_string(i + 1), "", GoalKind::atomic};
    s.is_start = i == 0;
    s.reward = reward(gen);
    net.states.push_back(s);
  }
  // Forward edges plus the odd back edge; states without successors are ends.
  std::bernoulli_distribution edge(0.4), back(0.1);
  int tid = 0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if ((j > i && edge(gen)) || (j < i && j > 1 && back(gen))) {
        std::string t = "T_" + std::to_string(++tid);
        net.arcs.push_back({"S_" + std::to_string(i), t, "S_" + std::to_string(j)});
      }
    }
  }
  for (auto& s : net.states) {
    if (s.kind == GoalKind::root) continue;
    s.is_end = std::none_of(net.arcs.begin(), net.arcs.end(), [&](const Arc& a) { return a.from == s.id; });
  }
  return net;
}

}  // namespace

TEST_CASE("select_next_goal picks the argmax with lowest-id ties") {
  ExecutionContext ctx;
  ctx.current_state = "S_s";
  {
    GoalNet net = chain_with_rewards({{"S_1", 0.2}, {"S_2", 0.9}});
    net.arcs = {{"S_s", "T_1", "S_1"}, {"S_s", "T_1", "S_2"}, {"S_1", "T_2", "S_e"}, {"S_2", "T_3", "S_e"}};
    CHECK(select_next_goal(ctx, net, {"S_1", "S_2"}) == "S_2");
  }
  {
    GoalNet net = chain_with_rewards({{"S_1", 0.5}, {"S_2", 0.5}});
    net.arcs = {{"S_s", "T_1", "S_1"}, {"S_s", "T_1", "S_2"}, {"S_1", "T_2", "S_e"}, {"S_2", "T_3", "S_e"}};
    CHECK(select_next_goal(ctx, net, {"S_2", "S_1"}) == "S_1");
  }
  {
    // Longer path through S_1 outweighs the heavier single state S_2.
    GoalNet net = chain_with_rewards({{"S_1", 0.5}, {"S_2", 1.2}, {"S_3", 0.9}});
    net.arcs = {{"S_s", "T_1", "S_1"}, {"S_s", "T_1", "S_2"}, {"S_1", "T_2", "S_3"}, {"S_3", "T_3", "S_e"}, {"S_2", "T_4", "S_e"}};
    CHECK(aggregated_path_reward(net, "S_1", {}) == doctest::Approx(0.5 + 0.9 + 1.0));
    CHECK(select_next_goal(ctx, net, {"S_1", "S_2"}) == "S_1");
    ctx.path_rewards["S_2"] = 2.0;
    CHECK(select_next_goal(ctx, net, {"S_1", "S_2"}) == "S_2");
    ctx.path_rewards.clear();
  }
  CHECK_THROWS_AS(select_next_goal(ctx, chain_with_rewards({}), {}), NoCandidate);
}

TEST_CASE("aggregated path reward matches exhaustive path enumeration") {
  std::mt19937 gen(7);
  for (int round = 0; round < 200; ++round) {
    GoalNet net = random_dag(gen, 2 + round % 7);
    for (const auto& s : net.states) {
      if (s.kind == GoalKind::root) continue;
      const double got = aggregated_path_reward(net, s.id, {});
      const double want = brute_force_reward(net, s.id);
      if (std::isinf(want)) {
        CHECK(got == want);
      } else {
        CHECK(got == doctest::Approx(want));
      }
    }
  }
}

TEST_CASE("goal choice is invariant under positive reward scaling") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int round = 0; round < 200; ++round) {
    GoalNet net = random_dag(gen, 3 + round % 6);
    std::set<std::string> candidates;
    for (const auto& a : net.arcs) {
      if (a.from == "S_1") candidates.insert(a.to);
    }
    if (candidates.empty()) continue;
    ExecutionContext ctx;
    ctx.current_state = "S_1";
    const std::string before = select_next_goal(ctx, net, candidates);
    const double k = scale(gen);
    for (auto& s : net.states) s.reward *= k;
    const std::string after = select_next_goal(ctx, net, candidates);
    CHECK(after == before);
  }
}
