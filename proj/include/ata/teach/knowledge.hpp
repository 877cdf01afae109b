#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ata/common/io.hpp"

namespace ata::teach {

class TeachError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UnknownRelation : public TeachError {
 public:
  using TeachError::TeachError;
};
class UnknownPoint : public TeachError {
 public:
  using TeachError::TeachError;
};

// Predicates are ground atoms kept as text, e.g. "enter_hole(osmosis)" or
// "water_ratio(ground)>water_ratio(root)".
using Predicate = std::string;

// Concept maps -------------------------------------------------------------

struct MapNode {
  std::string id;
  std::string label;  // the predicate the node stands for
};

struct MapLink {
  std::string from;
  std::string to;
  std::string relation;
};

struct ConceptMap {
  std::string map_id;
  std::string topic;
  std::vector<MapNode> nodes;
  std::vector<MapLink> links;

  const MapNode* node(std::string_view id) const;
};

ConceptMap concept_map_from_json(const Json& j);
Json to_json(const ConceptMap& m);

/// How one relation label turns a link into a rule. "{from}" and "{to}" in
/// the templates are replaced by the endpoint labels. Conjunction links that
/// share a conclusion merge into one rule with all their premises.
struct RelationTemplate {
  enum class Kind { implies, conjunction } kind = Kind::implies;
  std::vector<std::string> premises{"{from}"};
  std::string conclusion = "{to}";
};

struct Vocabulary {
  std::map<std::string, RelationTemplate, std::less<>> relations;

  bool knows(std::string_view relation) const { return relations.count(relation) > 0; }
  static Vocabulary from_json(const Json& j);
  static Vocabulary load(const std::filesystem::path& path);
  Json to_json() const;
};

struct Diagnostic {
  enum class Code { dangling_endpoint, self_loop, unknown_relation, duplicate_link, duplicate_node, isolated_node };
  Code code;
  bool warning = false;
  std::string where;  // node id or "links[i]"
  std::string message;
};

std::string_view to_string(Diagnostic::Code c);
Json to_json(const Diagnostic& d);

/// Every problem in the map. Only isolated nodes are warnings; a map is
/// accepted when no diagnostic is an error.
std::vector<Diagnostic> check_syntax(const ConceptMap& map, const Vocabulary& vocab);
bool accepted(const std::vector<Diagnostic>& diagnostics);

// Rules and knowledge -------------------------------------------------------

enum class Provenance { taught, built_in, authored };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view name);

struct Rule {
  std::vector<Predicate> premises;  // conjunction, duplicates removed, order kept
  Predicate conclusion;
  Provenance provenance = Provenance::taught;

  /// Same premise set and conclusion, whatever the order or provenance.
  bool same_logic(const Rule& other) const;
  void check() const;
  std::string str() const;
};

Json to_json(const Rule& r);
Rule rule_from_json(const Json& j);

/// Compiles a checked map. Throws UnknownRelation for labels missing from
/// the vocabulary.
std::vector<Rule> compile_map(const ConceptMap& map, const Vocabulary& vocab);

struct KnowledgePoint {
  int id = 0;
  std::string name;
  std::string description;
  std::string scene;  // notebook page shown with the hint
};

struct PointCatalog {
  std::vector<KnowledgePoint> points;

  const KnowledgePoint* find(int id) const;
  const KnowledgePoint& at(int id) const;  // UnknownPoint
  std::set<int> ids() const;
  static PointCatalog from_json(const Json& j);
  static PointCatalog load(const std::filesystem::path& path);
  Json to_json() const;
};

struct Mistake {
  int point = 0;
  double time = 0.0;
};

class KnowledgeBase {
 public:
  std::vector<Rule> rules;
  std::set<Predicate> facts;
  /// Predicates the agent can bring about itself, with the action that does it.
  std::map<Predicate, std::string> actions;
  std::set<int> learned_points;
  std::vector<Mistake> mistakes;

  /// Adds rules not already present (set semantics). Returns how many were new.
  std::size_t add_rules(const std::vector<Rule>& more);
  /// Marks points learned; each must be in the catalog.
  void learn(const std::set<int>& points, const PointCatalog& catalog);
  void record_mistake(int point, double time, const PointCatalog& catalog);
  bool mistaken(int point) const;

  Json to_json() const;
  static KnowledgeBase from_json(const Json& j);
};

/// Built-in rules plus action table, {"rules": [...], "actions": {pred: action}}.
KnowledgeBase load_builtins(const std::filesystem::path& path);

// Inference -----------------------------------------------------------------

/// Everything derivable from facts and action-establishable predicates.
std::set<Predicate> closure(const KnowledgeBase& kb);

struct Derivation {
  enum class Via { fact, action, rule } via = Via::fact;
  Predicate predicate;
  std::string action;                // via == action
  std::size_t rule = 0;              // via == rule, index into kb.rules
  std::vector<Derivation> premises;  // via == rule
};

Json to_json(const Derivation& d);

struct ActionPlan {
  Predicate goal;
  std::vector<std::string> steps;
  Derivation justification;
};

struct NoSolution {
  Predicate goal;
};

Json to_json(const ActionPlan& p);

/// Plan whose steps establish the leaf premises in left-to-right derivation
/// order. Facts need no step. A predicate is justified by the fact or action
/// that gives it directly, otherwise by the first rule that derived it in
/// the earliest round.
std::variant<ActionPlan, NoSolution> forward_chain(const KnowledgeBase& kb, const Predicate& goal);

/// Causal chains from one node label to another over the map's links, each
/// as the list of labels visited. Cycles are not followed.
std::vector<std::vector<std::string>> causal_paths(const ConceptMap& map, std::string_view from, std::string_view to);

// Teaching panels and hints -------------------------------------------------

struct TeachingPanel {
  std::string panel_id;
  std::string kind;  // "concept_map" or "experiment"
  int difficulty = 1;
  std::set<int> covered_points;
  std::string map_id;  // concept-map panels: the map the student completes

  Json to_json() const;
  static TeachingPanel from_json(const Json& j);
};

std::vector<TeachingPanel> load_panels(const std::filesystem::path& path);

struct AllDone {};

/// Unlearned panels, those touching an earlier mistake first, then by
/// difficulty and id.
std::variant<TeachingPanel, AllDone> select_panel(const KnowledgeBase& kb, const std::vector<TeachingPanel>& panels);

struct Hint {
  int point = 0;
  std::string name;
  std::string description;
  std::string scene;
};

Json to_json(const Hint& h);

/// One hint per knowledge point per stall episode once the student has been
/// stuck longer than the threshold.
class HintService {
 public:
  explicit HintService(const PointCatalog& catalog, double threshold_seconds = 180.0)
      : catalog_(&catalog), threshold_(threshold_seconds) {}

  std::optional<Hint> on_stall(int point, double stalled_for);
  /// The student did something; the next stall is a new episode.
  void activity() { hinted_.clear(); }
  double threshold() const { return threshold_; }

 private:
  const PointCatalog* catalog_;
  double threshold_;
  std::set<int> hinted_;
};

}  // namespace ata::teach
