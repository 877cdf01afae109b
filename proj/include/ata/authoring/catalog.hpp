#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ata/common/io.hpp"
#include "ata/goalnet/goal_net.hpp"
#include "ata/teach/knowledge.hpp"

namespace ata::authoring {

class CatalogError : public std::runtime_error {
 public:
  enum class Kind { schema, duplicate_goal, unknown_topic, unknown_goal, cycle, unknown_point, unknown_task };

  CatalogError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(CatalogError::Kind kind);

class UnknownCatalog : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PrerequisiteViolation : public std::runtime_error {
 public:
  PrerequisiteViolation(std::string goal, std::string missing)
      : std::runtime_error("'" + goal + "' selected before its prerequisite '" + missing + "'"),
        goal_(std::move(goal)),
        missing_(std::move(missing)) {}
  const std::string& goal() const { return goal_; }
  const std::string& missing() const { return missing_; }

 private:
  std::string goal_;
  std::string missing_;
};

class DuplicateSelection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reusable task functions the game side implements, by name.
struct TaskLibrary {
  std::map<std::string, std::string, std::less<>> tasks;  // name -> description

  bool contains(std::string_view name) const { return tasks.count(name) > 0; }
  static TaskLibrary from_json(const Json& j);
  static TaskLibrary load(const std::filesystem::path& path);
};

struct Topic {
  std::string id;
  std::string description;
};

struct LearningGoal {
  std::string id;
  std::string topic;
  int difficulty = 1;
  std::string description;
  std::vector<std::string> tasks;
  std::set<int> covered_points;
  /// Absent in the source means "the previous level of the same topic".
  std::set<std::string> prerequisites;
};

struct GoalCatalog {
  std::string catalog_id;
  std::string root;  // description of the overall goal
  std::vector<Topic> topics;
  std::vector<LearningGoal> goals;
  /// Content the teacher authored directly, taken as correct knowledge.
  std::vector<teach::Rule> authored_rules;

  const LearningGoal* find(std::string_view goal_id) const;
  const LearningGoal& at(std::string_view goal_id) const;
  /// Goals of one topic ordered by difficulty then id.
  std::vector<const LearningGoal*> topic_goals(std::string_view topic_id) const;
  std::set<int> points() const;

  Json to_json() const;
};

/// Parses and validates a catalog: unique ids, known topics, acyclic
/// prerequisites, points in `points`, tasks in `library`.
GoalCatalog load_catalog(const Json& j, const teach::PointCatalog& points, const TaskLibrary& library);
GoalCatalog load_catalog(const std::filesystem::path& path, const teach::PointCatalog& points,
                         const TaskLibrary& library);

/// Root net named after the catalog with one state per topic, in authored
/// order; a topic with several goals becomes a composite whose sub-net holds
/// its goals by difficulty. A goal's tasks run on the transition that
/// reaches it. The root net comes first in the returned list.
std::vector<goalnet::GoalNet> compile_catalog(const GoalCatalog& cat);

/// compile_catalog as a validated library.
goalnet::NetLibrary compile_library(const GoalCatalog& cat);

struct LearningPath {
  std::vector<std::string> goals;
};

/// Checks a student's ordering against the prerequisites.
LearningPath assemble_path(const GoalCatalog& cat, const std::vector<std::string>& selections);

/// Flat net visiting the path's goals in order, each reached by a transition
/// carrying that goal's tasks.
goalnet::GoalNet compile_path(const GoalCatalog& cat, const LearningPath& path, std::string net_id = {});

/// Whether a state id names one of the catalog goals.
bool is_goal_state(const GoalCatalog& cat, std::string_view state_id);

}  // namespace ata::authoring
