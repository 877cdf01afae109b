#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ata/affect/desirability.hpp"
#include "ata/affect/occ.hpp"
#include "ata/common/io.hpp"
#include "ata/goalnet/executor.hpp"
#include "ata/teach/knowledge.hpp"

namespace ata::runtime {

class UnknownEvent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that happened in the world, as the agent perceives it.
/// `payload["variant"]` picks between outcomes of the same event
/// (E2 agree/reject, E4 clean/error, ...).
struct SimEvent {
  std::string event_id;
  Json payload = Json::object();
  std::string endurer;  // filled from the desirability table when empty
  double timestamp = 0.0;

  std::string variant() const;
  /// "E2:agree", or the bare id when there is no variant.
  std::string content() const;

  Json to_json() const;
  /// Accepts {"event": "E2:agree"} as shorthand for id plus variant.
  static SimEvent from_json(const Json& j);
  static SimEvent parse(std::string_view content, Json payload = Json::object());
};

inline constexpr std::string_view kLearnGoal = "to_learn_from_user";
inline constexpr std::string_view kPracticeGoal = "to_practice";
inline constexpr std::string_view kAffectGoal = "to_be_affective";

/// Sub-goal net pursuing one of the activated goals.
std::string_view goal_net(std::string_view goal_id);

/// Everything an agent reads but never writes. Shared between agents.
struct AgentResources {
  goalnet::NetLibrary nets;
  teach::Vocabulary vocabulary;
  teach::KnowledgeBase builtins;
  teach::PointCatalog points;
  std::vector<teach::TeachingPanel> panels;
  affect::DesirabilityTable desirability;
  std::map<std::string, teach::ConceptMap> maps;  // by map id
  std::filesystem::path root;

  /// Reads nets/, vs/ and vs/maps/ under `data_root`.
  static std::shared_ptr<const AgentResources> load(const std::filesystem::path& data_root);
};

struct AgentConfig {
  std::string agent_id = "agent-1";
  std::string role = "water_molecule";
  std::string student = "student";
  /// Request practice once every point of the panel in view is learned.
  bool auto_practice = false;
  std::string performance_goal = "entering_root";
  /// Actions that fail when the agent carries out a plan.
  std::set<std::string> failing_actions;
  affect::DecayConfig decay;
};

using EmotionSnapshot = std::vector<affect::EmotionEpisode>;

class AgentInstance {
 public:
  AgentInstance(std::shared_ptr<const AgentResources> resources, AgentConfig config = {});
  AgentInstance(const AgentInstance&) = delete;
  AgentInstance& operator=(const AgentInstance&) = delete;

  const std::string& agent_id() const { return config_.agent_id; }
  const std::string& role() const { return config_.role; }
  const AgentConfig& config() const { return config_; }
  AgentConfig& config() { return config_; }
  const AgentResources& resources() const { return *resources_; }
  const goalnet::TaskRegistry& registry() const { return registry_; }
  const std::string& routine() const { return routine_; }

  /// Written only from the teachability thread.
  teach::KnowledgeBase kb;
  /// Written only from the affect thread.
  affect::ProspectRegistry prospects;

  /// Current live episodes. Swapped atomically; the affect thread is the
  /// only writer.
  std::shared_ptr<const EmotionSnapshot> emotion_snapshot() const;
  /// Adds `episode` and drops expired ones. A settled prospect names its
  /// event in `settles`, which retires the hope or fear it caused.
  void publish(const affect::EmotionEpisode& episode, double now, std::string_view settles = {});

  /// Events the agent itself causes (practice requests, transport attempts).
  void post(SimEvent event);
  std::vector<SimEvent> take_posted();

  /// Concept map carried by an E4 event: payload "map" inline, else the map
  /// of `panel_id`, broken by a dangling link for the error variant.
  teach::ConceptMap teaching_map(const SimEvent& e4, std::string_view panel_id) const;

  Json state_json(double now) const;

 private:
  void register_tasks();

  std::shared_ptr<const AgentResources> resources_;
  AgentConfig config_;
  std::string routine_ = "main_routine";
  goalnet::TaskRegistry registry_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const EmotionSnapshot> snapshot_;

  std::mutex outbox_mu_;
  std::vector<SimEvent> outbox_;
};

/// f_GS: the goals an event activates. Throws UnknownEvent when the event is
/// not in the agent's event table.
std::set<std::string> dispatch(const SimEvent& event, const AgentInstance& agent);

/// Live episodes decayed to `now`, expired ones dropped, strongest first.
std::vector<std::pair<affect::EmotionType, double>> emotion_state(const AgentInstance& agent, double now);

Json episode_to_json(const affect::EmotionEpisode& e);
affect::EmotionEpisode episode_from_json(const Json& j);

}  // namespace ata::runtime
