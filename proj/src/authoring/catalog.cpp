#include "ata/authoring/catalog.hpp"

#include <algorithm>
#include <functional>

namespace ata::authoring {

using goalnet::GoalKind;
using goalnet::GoalNet;
using goalnet::GoalState;
using goalnet::Transition;
using Kind = CatalogError::Kind;

std::string_view to_string(CatalogError::Kind kind) {
  switch (kind) {
    case Kind::schema: return "schema";
    case Kind::duplicate_goal: return "duplicate_goal";
    case Kind::unknown_topic: return "unknown_topic";
    case Kind::unknown_goal: return "unknown_goal";
    case Kind::cycle: return "cycle";
    case Kind::unknown_point: return "unknown_point";
    case Kind::unknown_task: return "unknown_task";
  }
  return "?";
}

TaskLibrary TaskLibrary::from_json(const Json& j) {
  TaskLibrary lib;
  try {
    for (const auto& [name, desc] : j.at("tasks").items()) lib.tasks[name] = desc.get<std::string>();
  } catch (const Json::exception& e) {
    throw CatalogError(Kind::schema, std::string("task library: ") + e.what());
  }
  return lib;
}

TaskLibrary TaskLibrary::load(const std::filesystem::path& path) { return from_json(load_json_file(path)); }

const LearningGoal* GoalCatalog::find(std::string_view goal_id) const {
  for (const auto& g : goals) {
    if (g.id == goal_id) return &g;
  }
  return nullptr;
}

const LearningGoal& GoalCatalog::at(std::string_view goal_id) const {
  if (const auto* g = find(goal_id)) return *g;
  throw CatalogError(Kind::unknown_goal, "no learning goal '" + std::string(goal_id) + "'");
}

std::vector<const LearningGoal*> GoalCatalog::topic_goals(std::string_view topic_id) const {
  std::vector<const LearningGoal*> out;
  for (const auto& g : goals) {
    if (g.topic == topic_id) out.push_back(&g);
  }
  std::stable_sort(out.begin(), out.end(), [](const LearningGoal* a, const LearningGoal* b) {
    return std::tie(a->difficulty, a->id) < std::tie(b->difficulty, b->id);
  });
  return out;
}

std::set<int> GoalCatalog::points() const {
  std::set<int> out;
  for (const auto& g : goals) out.insert(g.covered_points.begin(), g.covered_points.end());
  return out;
}

Json GoalCatalog::to_json() const {
  Json topics_j = Json::array(), goals_j = Json::array(), rules_j = Json::array();
  for (const auto& t : topics) topics_j.push_back({{"id", t.id}, {"description", t.description}});
  for (const auto& g : goals) {
    goals_j.push_back({{"id", g.id},
                       {"topic", g.topic},
                       {"difficulty", g.difficulty},
                       {"description", g.description},
                       {"tasks", g.tasks},
                       {"covered_points", g.covered_points},
                       {"prerequisites", g.prerequisites}});
  }
  for (const auto& r : authored_rules) rules_j.push_back(teach::to_json(r));
  return Json{{"format", "catalog/1"}, {"catalog_id", catalog_id}, {"root", root},
              {"topics", topics_j},    {"goals", goals_j},           {"authored_rules", rules_j}};
}

namespace {

void check_acyclic(const GoalCatalog& cat) {
  std::map<std::string, int> colour;  // 0 new, 1 on stack, 2 done
  std::function<void(const LearningGoal&)> visit = [&](const LearningGoal& g) {
    colour[g.id] = 1;
    for (const auto& p : g.prerequisites) {
      const int c = colour[p];
      if (c == 1) throw CatalogError(Kind::cycle, "prerequisites of '" + g.id + "' lead back to '" + p + "'");
      if (c == 0) visit(cat.at(p));
    }
    colour[g.id] = 2;
  };
  for (const auto& g : cat.goals) {
    if (colour[g.id] == 0) visit(g);
  }
}

}  // namespace

GoalCatalog load_catalog(const Json& j, const teach::PointCatalog& points, const TaskLibrary& library) {
  GoalCatalog cat;
  std::set<std::string> implicit;  // goals whose prerequisites default to the previous level
  try {
    cat.catalog_id = j.at("catalog_id").get<std::string>();
    cat.root = j.at("root").get<std::string>();
    for (const auto& t : j.at("topics")) cat.topics.push_back({t.at("id"), t.value("description", std::string{})});
    for (const auto& g : j.at("goals")) {
      LearningGoal goal;
      goal.id = g.at("id").get<std::string>();
      goal.topic = g.at("topic").get<std::string>();
      goal.difficulty = g.at("difficulty").get<int>();
      goal.description = g.value("description", std::string{});
      goal.tasks = g.value("tasks", std::vector<std::string>{});
      goal.covered_points = g.value("covered_points", std::set<int>{});
      if (g.contains("prerequisites")) {
        goal.prerequisites = g.at("prerequisites").get<std::set<std::string>>();
      } else {
        implicit.insert(goal.id);
      }
      cat.goals.push_back(goal);
    }
    for (const auto& r : j.value("authored_rules", Json::array())) {
      teach::Rule rule = teach::rule_from_json(r);
      rule.provenance = teach::Provenance::authored;
      cat.authored_rules.push_back(rule);
    }
  } catch (const Json::exception& e) {
    throw CatalogError(Kind::schema, "catalog: " + std::string(e.what()));
  } catch (const teach::TeachError& e) {
    throw CatalogError(Kind::schema, "catalog: " + std::string(e.what()));
  }

  std::set<std::string> ids{"S_0", "S_s", "S_e"};
  for (const auto& t : cat.topics) {
    if (!ids.insert(t.id).second) throw CatalogError(Kind::duplicate_goal, "id '" + t.id + "' used twice");
  }
  for (const auto& g : cat.goals) {
    if (!ids.insert(g.id).second) throw CatalogError(Kind::duplicate_goal, "id '" + g.id + "' used twice");
    if (std::none_of(cat.topics.begin(), cat.topics.end(), [&](const Topic& t) { return t.id == g.topic; })) {
      throw CatalogError(Kind::unknown_topic, "goal '" + g.id + "' names unknown topic '" + g.topic + "'");
    }
    if (g.difficulty < 1) throw CatalogError(Kind::schema, "goal '" + g.id + "': difficulty must be positive");
    for (int p : g.covered_points) {
      if (!points.find(p)) {
        throw CatalogError(Kind::unknown_point, "goal '" + g.id + "' covers unknown knowledge point " + std::to_string(p));
      }
    }
    for (const auto& t : g.tasks) {
      if (!library.contains(t)) throw CatalogError(Kind::unknown_task, "goal '" + g.id + "' uses unknown task '" + t + "'");
    }
  }
  for (auto& g : cat.goals) {
    if (!implicit.count(g.id)) continue;
    const LearningGoal* below = nullptr;
    for (const auto* other : cat.topic_goals(g.topic)) {
      if (other->difficulty < g.difficulty && (!below || other->difficulty >= below->difficulty)) below = other;
    }
    if (below) g.prerequisites.insert(below->id);
  }
  for (const auto& g : cat.goals) {
    for (const auto& p : g.prerequisites) {
      if (!cat.find(p)) throw CatalogError(Kind::unknown_goal, "goal '" + g.id + "' requires unknown goal '" + p + "'");
    }
  }
  check_acyclic(cat);
  return cat;
}

GoalCatalog load_catalog(const std::filesystem::path& path, const teach::PointCatalog& points,
                         const TaskLibrary& library) {
  return load_catalog(load_json_file(path), points, library);
}

namespace {

GoalState state(std::string id, std::string description, GoalKind kind = GoalKind::atomic) {
  GoalState s;
  s.id = std::move(id);
  s.description = std::move(description);
  s.kind = kind;
  return s;
}

Transition link(std::string id, std::string description, const std::string& from, const std::string& to,
                std::vector<std::string> tasks = {}) {
  Transition t;
  t.id = std::move(id);
  t.description = std::move(description);
  t.pre = {from};
  t.post = {to};
  t.tasks = std::move(tasks);
  return t;
}

/// S_0, S_s, the given goal states in order, S_e, chained by transitions.
GoalNet chain(std::string id, std::string description, const std::vector<GoalState>& goals,
              const std::vector<std::vector<std::string>>& tasks) {
  GoalNet net;
  net.id = std::move(id);
  net.description = description;
  net.states.push_back(state("S_0", description, GoalKind::root));
  GoalState start = state("S_s", "Start State");
  start.is_start = true;
  net.states.push_back(start);
  std::string prev = "S_s";
  for (std::size_t i = 0; i < goals.size(); ++i) {
    net.states.push_back(goals[i]);
    net.transitions.push_back(link("T_" + goals[i].id, "Pursue " + goals[i].description, prev, goals[i].id, tasks[i]));
    if (goals[i].kind == GoalKind::composite) net.branches.push_back({goals[i].id, *goals[i].sub_net});
    prev = goals[i].id;
  }
  GoalState end = state("S_e", "End State");
  end.is_end = true;
  net.states.push_back(end);
  net.transitions.push_back(link("T_done", "Finish", prev, "S_e"));
  for (const auto& t : net.transitions) net.arcs.push_back({t.pre[0], t.id, t.post[0]});
  return net;
}

}  // namespace

std::vector<GoalNet> compile_catalog(const GoalCatalog& cat) {
  std::vector<GoalNet> subs;
  std::vector<GoalState> topic_states;
  std::vector<std::vector<std::string>> topic_tasks;
  for (const auto& topic : cat.topics) {
    const auto goals = cat.topic_goals(topic.id);
    if (goals.empty()) continue;
    if (goals.size() == 1) {
      topic_states.push_back(state(goals[0]->id, goals[0]->description));
      topic_tasks.push_back(goals[0]->tasks);
      continue;
    }
    std::vector<GoalState> level_states;
    std::vector<std::vector<std::string>> level_tasks;
    for (const auto* g : goals) {
      level_states.push_back(state(g->id, g->description));
      level_tasks.push_back(g->tasks);
    }
    GoalNet sub = chain(cat.catalog_id + "." + topic.id, topic.description, level_states, level_tasks);
    GoalState composite = state(topic.id, topic.description, GoalKind::composite);
    composite.sub_net = sub.id;
    topic_states.push_back(composite);
    topic_tasks.emplace_back();
    subs.push_back(std::move(sub));
  }
  std::vector<GoalNet> out;
  out.push_back(chain(cat.catalog_id, cat.root, topic_states, topic_tasks));
  for (auto& s : subs) out.push_back(std::move(s));
  return out;
}

goalnet::NetLibrary compile_library(const GoalCatalog& cat) {
  goalnet::NetLibrary lib;
  for (auto& net : compile_catalog(cat)) {
    goalnet::validate(net);
    lib.add(std::move(net));
  }
  lib.validate();
  return lib;
}

LearningPath assemble_path(const GoalCatalog& cat, const std::vector<std::string>& selections) {
  std::set<std::string> done;
  for (const auto& id : selections) {
    const LearningGoal& g = cat.at(id);
    if (done.count(id)) throw DuplicateSelection("'" + id + "' selected twice");
    for (const auto& p : g.prerequisites) {
      if (!done.count(p)) throw PrerequisiteViolation(id, p);
    }
    done.insert(id);
  }
  return LearningPath{selections};
}

GoalNet compile_path(const GoalCatalog& cat, const LearningPath& path, std::string net_id) {
  assemble_path(cat, path.goals);
  std::vector<GoalState> states;
  std::vector<std::vector<std::string>> tasks;
  for (const auto& id : path.goals) {
    const LearningGoal& g = cat.at(id);
    states.push_back(state(g.id, g.description));
    tasks.push_back(g.tasks);
  }
  if (net_id.empty()) net_id = cat.catalog_id + ".path";
  GoalNet net = chain(net_id, "Personal learning path: " + cat.root, states, tasks);
  goalnet::validate(net);
  return net;
}

bool is_goal_state(const GoalCatalog& cat, std::string_view state_id) { return cat.find(state_id) != nullptr; }

}  // namespace ata::authoring
