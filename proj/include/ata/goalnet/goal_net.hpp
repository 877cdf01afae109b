#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ata/common/io.hpp"

namespace ata::goalnet {

inline constexpr std::string_view kFormatVersion = "goalnet/1";

enum class GoalKind { root, atomic, composite };
enum class SelectionStrategy { sequential, rule_based, probabilistic };

std::string_view to_string(GoalKind kind);
std::string_view to_string(SelectionStrategy strategy);

/// Shared key/value store between a context and its task hooks. Keys are
/// namespaced by the owning module, e.g. "learn.response".
using Blackboard = std::map<std::string, Json, std::less<>>;

/// One blackboard test. `ne` and `absent` hold when the key is missing.
struct Predicate {
  enum class Op { eq, ne, exists, absent, lt, le, gt, ge };

  std::string key;
  Op op = Op::exists;
  Json value;

  bool holds(const Blackboard& board) const;
};

std::string_view to_string(Predicate::Op op);

/// Conjunction of predicates; empty means "always".
using Condition = std::vector<Predicate>;

bool holds(const Condition& condition, const Blackboard& board);

/// Row of a rule table. A row with `task` selects the action before the
/// transition runs; a row with `post` picks the successor once its tasks
/// have completed (the Choice Transition case).
struct ChoiceRule {
  Condition when;
  std::optional<std::string> task;
  std::optional<std::string> post;
};

struct GoalState {
  std::string id;
  std::string description;
  GoalKind kind = GoalKind::atomic;
  std::optional<std::string> sub_net;
  bool is_start = false;
  bool is_end = false;
  double reward = 1.0;
};

struct Transition {
  std::string id;
  std::string description;
  Condition trigger;
  std::vector<std::string> tasks;
  std::vector<std::string> pre;
  std::vector<std::string> post;
  SelectionStrategy strategy = SelectionStrategy::sequential;
  std::vector<ChoiceRule> rules;
  std::vector<std::pair<std::string, double>> probabilities;
  /// Transitions sharing a fork group fire together (concurrent pursuit).
  std::optional<std::string> fork_group;
  /// Logical thread that runs the branch opened by a fork transition.
  std::optional<std::string> thread;

  bool has_branch_rules() const;
};

struct Arc {
  std::string from;
  std::string transition;
  std::string to;

  friend bool operator==(const Arc&, const Arc&) = default;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

struct Branch {
  std::string state;
  std::string net;
};

class GoalNet {
 public:
  std::string id;
  std::string description;
  std::vector<GoalState> states;
  std::vector<Transition> transitions;
  std::vector<Arc> arcs;
  std::vector<Branch> branches;

  const GoalState* find_state(std::string_view state_id) const;
  const Transition* find_transition(std::string_view transition_id) const;
  const GoalState& state(std::string_view state_id) const;
  const Transition& transition(std::string_view transition_id) const;

  const GoalState& root() const;
  const GoalState& start() const;
  bool is_end(std::string_view state_id) const;

  /// Transitions having `state_id` in their pre-set, in declaration order.
  std::vector<const Transition*> outgoing(std::string_view state_id) const;
};

class GoalNetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public GoalNetError {
 public:
  using GoalNetError::GoalNetError;
};

class ValidationError : public GoalNetError {
 public:
  enum class Violation {
    duplicate_id,
    missing_root,
    missing_start,
    missing_end,
    dangling_arc,
    empty_endpoint,
    composite_mismatch,
    cyclic_branch,
    unknown_net,
    unreachable_state,
    probability_sum,
    rule_table,
    ambiguous_transitions,
    terminal_exit,
    unresolved_task,
  };

  ValidationError(Violation violation, const std::string& message);
  Violation violation() const { return violation_; }

 private:
  Violation violation_;
};

std::string_view to_string(ValidationError::Violation violation);

/// Checks every intra-net invariant; throws ValidationError on the first
/// violation found.
void validate(const GoalNet& net);

/// A set of nets linked by branches. Immutable once built.
class NetLibrary {
 public:
  /// Adds a validated net; throws ValidationError on a duplicate id.
  void add(GoalNet net);
  /// Cross-net checks: every branch target exists and branches form a DAG.
  void validate() const;

  const GoalNet& get(std::string_view net_id) const;
  const GoalNet* find(std::string_view net_id) const;
  std::vector<std::string> ids() const;
  bool empty() const { return nets_.empty(); }

  /// Length of the longest branch chain starting at `net_id` (1 for a leaf).
  std::size_t branch_depth(std::string_view net_id) const;

 private:
  std::map<std::string, std::shared_ptr<const GoalNet>, std::less<>> nets_;
  std::vector<std::string> order_;
};

// Structured-text exchange ------------------------------------------------

GoalNet goalnet_from_json(const Json& doc);
Json to_json(const GoalNet& net);

/// Parses and validates one net document.
GoalNet load_goalnet(std::string_view text);
/// Accepts either a single-net document or {"nets": [...]} and validates the
/// resulting library, including branch acyclicity.
NetLibrary load_goalnet_bundle(std::string_view text);
/// Loads every *.json net document in `dir` (sorted by filename).
NetLibrary load_library_dir(const std::filesystem::path& dir);

/// Canonical text form; stable across load/serialize cycles.
std::string serialize(const GoalNet& net);
std::string serialize_bundle(const NetLibrary& library);

}  // namespace ata::goalnet
