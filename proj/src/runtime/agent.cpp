#include "ata/runtime/agent.hpp"

#include <algorithm>
#include <cmath>

#include "ata/fcm/intensity.hpp"

namespace ata::runtime {

using goalnet::TaskCall;
using goalnet::TaskResult;

// Events ----------------------------------------------------------------------

std::string SimEvent::variant() const {
  if (payload.is_object() && payload.contains("variant")) return payload.at("variant").get<std::string>();
  return {};
}

std::string SimEvent::content() const {
  const std::string v = variant();
  return v.empty() ? event_id : event_id + ":" + v;
}

Json SimEvent::to_json() const {
  Json j{{"event_id", event_id}, {"payload", payload}, {"timestamp", timestamp}};
  if (!endurer.empty()) j["endurer"] = endurer;
  return j;
}

SimEvent SimEvent::parse(std::string_view content, Json payload) {
  SimEvent e;
  if (!payload.is_object()) throw DocumentError("event payload must be an object");
  e.payload = std::move(payload);
  const auto colon = content.find(':');
  e.event_id = std::string(content.substr(0, colon));
  if (colon != std::string_view::npos) e.payload["variant"] = std::string(content.substr(colon + 1));
  if (e.event_id.empty()) throw DocumentError("event without an id");
  return e;
}

SimEvent SimEvent::from_json(const Json& j) {
  try {
    SimEvent e = j.contains("event") ? parse(j.at("event").get<std::string>(), j.value("payload", Json::object()))
                                     : parse(j.at("event_id").get<std::string>(), j.value("payload", Json::object()));
    e.endurer = j.value("endurer", std::string{});
    e.timestamp = j.value("timestamp", 0.0);
    return e;
  } catch (const Json::exception& ex) {
    throw DocumentError(std::string("event: ") + ex.what());
  }
}

std::string_view goal_net(std::string_view goal_id) {
  if (goal_id == kLearnGoal) return "learn_from_user";
  if (goal_id == kPracticeGoal) return "practice";
  if (goal_id == kAffectGoal) return "be_affective";
  throw UnknownEvent("no sub-goal net pursues '" + std::string(goal_id) + "'");
}

std::set<std::string> dispatch(const SimEvent& event, const AgentInstance& agent) {
  if (!agent.resources().desirability.find(event.content())) {
    throw UnknownEvent("event '" + event.content() + "' is not in the event table");
  }
  std::set<std::string> goals{std::string(kAffectGoal)};
  if (event.event_id == "E1") goals.insert(std::string(kLearnGoal));
  if (event.event_id == "E3") goals.insert(std::string(kPracticeGoal));
  return goals;
}

// Resources -------------------------------------------------------------------

std::shared_ptr<const AgentResources> AgentResources::load(const std::filesystem::path& data_root) {
  auto r = std::make_shared<AgentResources>();
  r->root = data_root;
  r->nets = goalnet::load_library_dir(data_root / "nets");
  const auto vs = data_root / "vs";
  r->vocabulary = teach::Vocabulary::load(vs / "vocabulary.json");
  r->builtins = teach::load_builtins(vs / "builtins.json");
  r->points = teach::PointCatalog::load(vs / "knowledge_points.json");
  r->panels = teach::load_panels(vs / "panels.json");
  r->desirability = affect::DesirabilityTable::load(vs / "desirability.json");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(vs / "maps")) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    teach::ConceptMap m = teach::concept_map_from_json(load_json_file(f));
    r->maps[m.map_id] = std::move(m);
  }
  return r;
}

// Emotions --------------------------------------------------------------------

Json episode_to_json(const affect::EmotionEpisode& e) {
  return Json{{"emotion", affect::to_string(e.emotion)},
              {"intensity", e.intensity},
              {"raw_intensity", e.raw_intensity},
              {"cause", e.cause},
              {"target", e.target},
              {"born_at", e.born_at},
              {"decay_rate_b", e.decay_rate_b}};
}

affect::EmotionEpisode episode_from_json(const Json& j) {
  affect::EmotionEpisode e;
  e.emotion = affect::emotion_from_string(j.at("emotion").get<std::string>());
  e.intensity = j.at("intensity").get<double>();
  e.raw_intensity = j.at("raw_intensity").get<double>();
  e.cause = j.at("cause").get<std::string>();
  e.target = j.at("target").get<std::string>();
  e.born_at = j.at("born_at").get<double>();
  e.decay_rate_b = j.at("decay_rate_b").get<double>();
  return e;
}

std::shared_ptr<const EmotionSnapshot> AgentInstance::emotion_snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

void AgentInstance::publish(const affect::EmotionEpisode& episode, double now, std::string_view settles) {
  auto next = std::make_shared<EmotionSnapshot>();
  const double eps = config_.decay.epsilon;
  for (const auto& e : *emotion_snapshot()) {
    const bool prospect = e.emotion == affect::EmotionType::hope || e.emotion == affect::EmotionType::fear;
    if (prospect && !settles.empty() && e.cause == settles) continue;
    if (!e.expired_at(now, eps)) next->push_back(e);
  }
  if (!episode.expired_at(now, eps)) next->push_back(episode);
  std::lock_guard lock(snapshot_mu_);
  snapshot_ = std::move(next);
}

std::vector<std::pair<affect::EmotionType, double>> emotion_state(const AgentInstance& agent, double now) {
  std::vector<std::pair<affect::EmotionType, double>> out;
  for (const auto& e : *agent.emotion_snapshot()) {
    const double v = e.intensity_at(now);
    if (v >= agent.config().decay.epsilon) out.emplace_back(e.emotion, v);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

// Agent -----------------------------------------------------------------------

AgentInstance::AgentInstance(std::shared_ptr<const AgentResources> resources, AgentConfig config)
    : resources_(std::move(resources)), config_(std::move(config)), snapshot_(std::make_shared<EmotionSnapshot>()) {
  kb = resources_->builtins;
  register_tasks();
  registry_.check_resolves(resources_->nets);
}

void AgentInstance::post(SimEvent event) {
  std::lock_guard lock(outbox_mu_);
  outbox_.push_back(std::move(event));
}

std::vector<SimEvent> AgentInstance::take_posted() {
  std::lock_guard lock(outbox_mu_);
  return std::exchange(outbox_, {});
}

teach::ConceptMap AgentInstance::teaching_map(const SimEvent& e4, std::string_view panel_id) const {
  if (e4.payload.contains("map")) return teach::concept_map_from_json(e4.payload.at("map"));
  std::string map_id = "osmosis";
  for (const auto& p : resources_->panels) {
    if (p.panel_id == panel_id && !p.map_id.empty()) map_id = p.map_id;
  }
  auto it = resources_->maps.find(map_id);
  if (it == resources_->maps.end()) throw teach::TeachError("no concept map '" + map_id + "'");
  teach::ConceptMap m = it->second;
  if (e4.variant() == "error") m.links.push_back({m.nodes.front().id, "nowhere", m.links.front().relation});
  return m;
}

Json AgentInstance::state_json(double now) const {
  Json emotions = Json::array();
  for (const auto& [type, v] : emotion_state(*this, now)) {
    emotions.push_back({{"emotion", affect::to_string(type)}, {"intensity", v}});
  }
  Json pending = Json::array();
  for (const auto& [key, ep] : prospects.entries()) pending.push_back({{"event", key.second}, {"emotion", affect::to_string(ep.emotion)}});
  return Json{{"agent_id", config_.agent_id}, {"role", config_.role},       {"time", now},
              {"kb", kb.to_json()},            {"emotions", std::move(emotions)}, {"pending_prospects", std::move(pending)}};
}

// Task functions ---------------------------------------------------------------

namespace {

const Json& board(const TaskCall& c, const std::string& key) {
  auto it = c.ctx.blackboard.find(key);
  if (it == c.ctx.blackboard.end()) throw goalnet::TaskFailure("blackboard has no '" + key + "'");
  return it->second;
}

std::set<int> panel_points(const AgentResources& r, const std::string& panel_id) {
  for (const auto& p : r.panels) {
    if (p.panel_id == panel_id) return p.covered_points;
  }
  return {};
}

}  // namespace

void AgentInstance::register_tasks() {
  const AgentResources& res = *resources_;
  // A hook that throws reports a task failure instead of unwinding the step.
  auto add = [this](std::string name, goalnet::TaskHook hook) {
    registry_.add(std::move(name), [hook = std::move(hook)](TaskCall& c) {
      try {
        return hook(c);
      } catch (const std::exception& e) {
        return TaskResult::failure(e.what());
      }
    });
  };

  // Main routine.
  add("check_user", [](TaskCall& c) {
    const bool present = c.ctx.blackboard.count("routine.user_present") && c.ctx.blackboard.at("routine.user_present") == true;
    return TaskResult::success(Json{{"user_present", present}});
  });
  add("init_sub_goal", [](TaskCall& c) {
    return TaskResult::success(Json{{"pursuit", c.transition.post.front()}});
  });
  add("finish", [](TaskCall&) { return TaskResult::success(); });

  // Learning from the student.
  add("message_teaching", [](TaskCall&) {
    return TaskResult::success(Json{{"message", "Please help me! I cannot enter the root."}});
  });
  add("check_response", [](TaskCall& c) {
    return TaskResult::success(Json{{"response", board(c, "learn.response")}});
  });
  add("show_approach", [this, &res](TaskCall& c) {
    auto pick = teach::select_panel(kb, res.panels);
    if (std::holds_alternative<teach::AllDone>(pick)) {
      c.ctx.blackboard["learn.panel"] = "";
      return TaskResult::success(Json{{"panel", nullptr}});
    }
    const auto& panel = std::get<teach::TeachingPanel>(pick);
    c.ctx.blackboard["learn.panel"] = panel.panel_id;
    return TaskResult::success(Json{{"panel", panel.panel_id}, {"kind", panel.kind}});
  });
  add("perceive_input", [this, &res](TaskCall& c) {
    if (c.net.id == "practice") {
      const std::string goal = board(c, "practice.inquiry").get<std::string>();
      return TaskResult::success(Json{{"inquiry", goal}});
    }
    const SimEvent e4 = SimEvent::from_json(board(c, "learn.event"));
    c.ctx.blackboard.erase("learn.map_pending");
    const std::string panel = c.ctx.blackboard.count("learn.panel") ? c.ctx.blackboard.at("learn.panel").get<std::string>() : "";
    try {
      c.ctx.blackboard["learn.map"] = teach::to_json(teaching_map(e4, panel));
    } catch (const std::exception& ex) {
      c.ctx.blackboard.erase("learn.map");
      c.ctx.blackboard["learn.map_error"] = ex.what();
      return TaskResult::success(Json{{"map", nullptr}, {"error", ex.what()}});
    }
    (void)res;
    return TaskResult::success(Json{{"map", c.ctx.blackboard.at("learn.map").at("map_id")}});
  });
  add("check_error", [&res](TaskCall& c) {
    Json diags = Json::array();
    bool clean = false;
    if (c.ctx.blackboard.count("learn.map")) {
      const auto ds = teach::check_syntax(teach::concept_map_from_json(c.ctx.blackboard.at("learn.map")), res.vocabulary);
      for (const auto& d : ds) diags.push_back(teach::to_json(d));
      clean = teach::accepted(ds);
    } else {
      diags.push_back({{"code", "Schema"}, {"severity", "error"}, {"message", c.ctx.blackboard.at("learn.map_error")}});
    }
    c.ctx.blackboard["learn.map_clean"] = clean;
    c.ctx.blackboard["learn.diagnostics"] = diags;
    return TaskResult::success(Json{{"clean", clean}, {"diagnostics", diags}});
  });
  add("message_alert", [this, &res](TaskCall& c) {
    if (c.net.id == "practice") {
      return TaskResult::success(Json{{"message", "I cannot work out how to reach " +
                                                      board(c, "practice.goal").get<std::string>() +
                                                      " yet. Please teach me more."}});
    }
    const std::string panel = c.ctx.blackboard.count("learn.panel") ? c.ctx.blackboard.at("learn.panel").get<std::string>() : "";
    const auto points = panel_points(res, panel);
    for (int p : points) kb.record_mistake(p, c.ctx.clock, res.points);
    return TaskResult::success(Json{{"message", "Something is wrong in what you taught me."}, {"mistakes", points}});
  });
  add("save_knowledge", [this, &res](TaskCall& c) {
    const auto map = teach::concept_map_from_json(board(c, "learn.map"));
    const auto rules = teach::compile_map(map, res.vocabulary);
    const std::size_t added = kb.add_rules(rules);
    // Credit the panel the map belongs to; fall back to the one in view.
    std::string panel = c.ctx.blackboard.count("learn.panel") ? c.ctx.blackboard.at("learn.panel").get<std::string>() : "";
    for (const auto& p : res.panels) {
      if (!map.map_id.empty() && p.map_id == map.map_id) {
        panel = p.panel_id;
        break;
      }
    }
    const auto points = panel_points(res, panel);
    kb.learn(points, res.points);
    Json rule_text = Json::array();
    for (const auto& r : rules) rule_text.push_back(r.str());
    const bool panel_done =
        !points.empty() && std::all_of(points.begin(), points.end(), [&](int p) { return kb.learned_points.count(p) > 0; });
    if (panel_done && config_.auto_practice) {
      SimEvent e3 = SimEvent::parse("E3:start", Json{{"goal", config_.performance_goal}, {"auto", true}});
      e3.timestamp = c.ctx.clock;
      post(std::move(e3));
    }
    return TaskResult::success(Json{{"rules", rule_text}, {"added", added}, {"learned_points", points}, {"panel_done", panel_done}});
  });

  // Practice.
  add("identify_target", [](TaskCall& c) {
    c.ctx.blackboard["practice.goal"] = board(c, "practice.inquiry");
    return TaskResult::success(Json{{"goal", c.ctx.blackboard.at("practice.goal")}});
  });
  add("reasoning", [this](TaskCall& c) {
    const auto result = teach::forward_chain(kb, board(c, "practice.goal").get<std::string>());
    const bool solvable = std::holds_alternative<teach::ActionPlan>(result);
    c.ctx.blackboard["practice.solvable"] = solvable;
    if (solvable) c.ctx.blackboard["practice.plan"] = teach::to_json(std::get<teach::ActionPlan>(result));
    return TaskResult::success(Json{{"solvable", solvable}});
  });
  add("generate_plan", [](TaskCall& c) {
    return TaskResult::success(Json{{"plan", board(c, "practice.plan").at("steps")}});
  });
  add("execute_plan", [this](TaskCall& c) {
    const Json& plan = board(c, "practice.plan");
    SimEvent attempt = SimEvent::parse("E5");
    attempt.timestamp = c.ctx.clock;
    post(attempt);
    Json done = Json::array();
    std::string blocked_at;
    for (const auto& step : plan.at("steps")) {
      const std::string action = step.get<std::string>();
      if (config_.failing_actions.count(action)) {
        blocked_at = action;
        break;
      }
      done.push_back(action);
    }
    const bool success = blocked_at.empty();
    SimEvent outcome = SimEvent::parse(success ? "E6:success" : "E6:blocked");
    outcome.timestamp = c.ctx.clock;
    post(outcome);
    Json detail{{"executed", done}, {"outcome", success ? "success" : "blocked"}};
    if (!success) detail["blocked_at"] = blocked_at;
    return TaskResult::success(detail);
  });

  // Being affective.
  add("perceive_event_goal", [this, &res](TaskCall& c) {
    const std::string content = board(c, "affect.event").get<std::string>();
    const auto& entry = res.desirability.at(content);
    c.ctx.blackboard["affect.goal"] = entry.goal;
    c.ctx.blackboard["affect.endurer"] = entry.endurer == "agent" ? config_.role : config_.student;
    return TaskResult::success(Json{{"event", content}, {"goal", entry.goal}});
  });
  add("reason_desirability", [&res](TaskCall& c) {
    const std::string content = board(c, "affect.event").get<std::string>();
    const auto& entry = res.desirability.at(content);
    const double d = res.desirability.judge(content, entry.goal, entry.magnitude);
    c.ctx.blackboard["affect.desirability"] = d;
    return TaskResult::success(Json{{"desirability", d}});
  });
  add("check_identity", [this](TaskCall& c) {
    const bool self = board(c, "affect.endurer") == config_.role;
    c.ctx.blackboard["affect.self_endured"] = self;
    return TaskResult::success(Json{{"self_endured", self}});
  });
  add("check_will", [&res](TaskCall& c) {
    const auto& entry = res.desirability.at(board(c, "affect.event").get<std::string>());
    const affect::Will w = entry.will.value_or(affect::Will::good_will);
    c.ctx.blackboard["affect.will"] = std::string(affect::to_string(w));
    return TaskResult::success(Json{{"will", affect::to_string(w)}});
  });
  add("check_relevance", [&res](TaskCall& c) {
    const auto& entry = res.desirability.at(board(c, "affect.event").get<std::string>());
    c.ctx.blackboard["affect.prospect_relevant"] = entry.prospect_relevant;
    return TaskResult::success(Json{{"prospect_relevant", entry.prospect_relevant}});
  });
  add("reason_emotion_intensity", [this, &res](TaskCall& c) {
    const std::string content = board(c, "affect.event").get<std::string>();
    const auto& entry = res.desirability.at(content);
    const affect::AppraisalInput in = res.desirability.appraisal_input(content, config_.role, config_.student);
    const double now = c.ctx.clock;
    affect::EmotionEpisode ep;
    if (entry.resolves) {
      const affect::ProspectRegistry::Key key{config_.role, *entry.resolves};
      const auto* pending = prospects.find(key);
      if (!pending) return TaskResult::failure("no pending prospect for '" + *entry.resolves + "'");
      const double antecedent = pending->intensity_at(now);
      const auto resolution = prospects.resolve(key, entry.confirmed);
      c.ctx.blackboard["affect.settles"] = *entry.resolves;
      const affect::AppraisalVariables vars{.expectation = in.expectation, .desirability = std::abs(in.desirability)};
      const double raw = fcm::intensity(resolution.emotion, vars, antecedent);
      ep = affect::make_episode(resolution.emotion, raw, content, in.event_endurer, now,
                                config_.decay.rate(resolution.emotion));
    } else {
      const affect::EmotionType type = affect::appraise_type(in);
      const affect::AppraisalVariables vars{.expectation = in.expectation, .desirability = in.desirability};
      ep = affect::make_episode(type, fcm::intensity(type, vars), content, in.event_endurer, now, config_.decay.rate(type));
      if (type == affect::EmotionType::hope || type == affect::EmotionType::fear) affect::appraise(in, prospects, ep);
    }
    c.ctx.blackboard["affect.episode"] = episode_to_json(ep);
    return TaskResult::success(Json{{"emotion", affect::to_string(ep.emotion)}, {"raw_intensity", ep.raw_intensity}});
  });
  add("execute_expression", [this](TaskCall& c) {
    const affect::EmotionEpisode ep = episode_from_json(board(c, "affect.episode"));
    const auto settles = c.ctx.blackboard.find("affect.settles");
    publish(ep, c.ctx.clock, settles == c.ctx.blackboard.end() ? "" : settles->second.get<std::string>());
    Json detail{{"emission", episode_to_json(ep)}};
    if (settles != c.ctx.blackboard.end()) detail["settles"] = settles->second;
    return TaskResult::success(detail);
  });
}

}  // namespace ata::runtime
