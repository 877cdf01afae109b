#include "ata/goalnet/goal_net.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace ata::goalnet {

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::array<std::pair<std::string_view, E>, N>& table, std::string_view text,
             std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw ParseError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::pair<std::string_view, GoalKind>, 3> kKinds{{
    {"root", GoalKind::root},
    {"atomic", GoalKind::atomic},
    {"composite", GoalKind::composite},
}};

constexpr std::array<std::pair<std::string_view, SelectionStrategy>, 3> kStrategies{{
    {"sequential", SelectionStrategy::sequential},
    {"rule_based", SelectionStrategy::rule_based},
    {"probabilistic", SelectionStrategy::probabilistic},
}};

constexpr std::array<std::pair<std::string_view, Predicate::Op>, 8> kOps{{
    {"eq", Predicate::Op::eq},
    {"ne", Predicate::Op::ne},
    {"exists", Predicate::Op::exists},
    {"absent", Predicate::Op::absent},
    {"lt", Predicate::Op::lt},
    {"le", Predicate::Op::le},
    {"gt", Predicate::Op::gt},
    {"ge", Predicate::Op::ge},
}};

const Json& require(const Json& obj, std::string_view key, std::string_view where) {
  if (!obj.is_object()) throw ParseError(std::string(where) + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string(where) + ": missing '" + std::string(key) + "'");
  }
  return *it;
}

std::string require_string(const Json& obj, std::string_view key, std::string_view where) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) {
    throw ParseError(std::string(where) + ": '" + std::string(key) + "' must be a string");
  }
  return v.get<std::string>();
}

std::string optional_string(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string{};
}

std::vector<std::string> string_list(const Json& obj, std::string_view key, std::string_view where,
                                     bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ParseError(std::string(where) + ": missing '" + std::string(key) + "'");
    return {};
  }
  if (!it->is_array()) {
    throw ParseError(std::string(where) + ": '" + std::string(key) + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& e : *it) {
    if (!e.is_string()) throw ParseError(std::string(where) + ": non-string in '" + std::string(key) + "'");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Predicate predicate_from_json(const Json& j, std::string_view where) {
  Predicate p;
  p.key = require_string(j, "key", where);
  p.op = parse_enum(kOps, require_string(j, "op", where), "predicate op");
  if (auto it = j.find("value"); it != j.end()) p.value = *it;
  const bool needs_value = p.op != Predicate::Op::exists && p.op != Predicate::Op::absent;
  if (needs_value && p.value.is_null()) {
    throw ParseError(std::string(where) + ": predicate on '" + p.key + "' needs a value");
  }
  return p;
}

Condition condition_from_json(const Json& j, std::string_view where) {
  Condition c;
  if (j.is_null()) return c;
  if (j.is_object()) {
    c.push_back(predicate_from_json(j, where));
    return c;
  }
  if (!j.is_array()) throw ParseError(std::string(where) + ": condition must be an object or array");
  for (const auto& p : j) c.push_back(predicate_from_json(p, where));
  return c;
}

Json to_json(const Predicate& p) {
  Json j{{"key", p.key}, {"op", to_string(p.op)}};
  if (!p.value.is_null()) j["value"] = p.value;
  return j;
}

Json to_json(const Condition& c) {
  Json arr = Json::array();
  for (const auto& p : c) arr.push_back(to_json(p));
  return arr;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

[[noreturn]] void fail(ValidationError::Violation v, const std::string& msg) {
  throw ValidationError(v, msg);
}

// Two predicates on the same key that can never both hold.
bool exclusive(const Predicate& a, const Predicate& b) {
  using Op = Predicate::Op;
  if (a.key != b.key) return false;
  auto pair_is = [&](Op x, Op y) { return (a.op == x && b.op == y) || (a.op == y && b.op == x); };
  if (a.op == Op::eq && b.op == Op::eq) return a.value != b.value;
  if (pair_is(Op::exists, Op::absent)) return true;
  if (pair_is(Op::eq, Op::absent)) return true;
  if (pair_is(Op::eq, Op::ne)) return (a.op == Op::eq ? a.value : b.value) == (a.op == Op::ne ? a.value : b.value);
  return false;
}

bool exclusive(const Condition& a, const Condition& b) {
  for (const auto& p : a) {
    for (const auto& q : b) {
      if (exclusive(p, q)) return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(GoalKind kind) {
  for (const auto& [name, value] : kKinds) {
    if (value == kind) return name;
  }
  return "?";
}

std::string_view to_string(SelectionStrategy strategy) {
  for (const auto& [name, value] : kStrategies) {
    if (value == strategy) return name;
  }
  return "?";
}

std::string_view to_string(Predicate::Op op) {
  for (const auto& [name, value] : kOps) {
    if (value == op) return name;
  }
  return "?";
}

bool Predicate::holds(const Blackboard& board) const {
  auto it = board.find(key);
  const bool present = it != board.end() && !it->second.is_null();
  switch (op) {
    case Op::exists:
      return present;
    case Op::absent:
      return !present;
    case Op::eq:
      return present && it->second == value;
    case Op::ne:
      return !present || it->second != value;
    default:
      break;
  }
  if (!present || !it->second.is_number() || !value.is_number()) return false;
  const double lhs = it->second.get<double>();
  const double rhs = value.get<double>();
  switch (op) {
    case Op::lt:
      return lhs < rhs;
    case Op::le:
      return lhs <= rhs;
    case Op::gt:
      return lhs > rhs;
    case Op::ge:
      return lhs >= rhs;
    default:
      return false;
  }
}

bool holds(const Condition& condition, const Blackboard& board) {
  return std::all_of(condition.begin(), condition.end(),
                     [&](const Predicate& p) { return p.holds(board); });
}

bool Transition::has_branch_rules() const {
  return std::any_of(rules.begin(), rules.end(), [](const ChoiceRule& r) { return r.post.has_value(); });
}

ValidationError::ValidationError(Violation violation, const std::string& message)
    : GoalNetError(std::string(to_string(violation)) + ": " + message), violation_(violation) {}

std::string_view to_string(ValidationError::Violation violation) {
  using V = ValidationError::Violation;
  switch (violation) {
    case V::duplicate_id: return "duplicate id";
    case V::missing_root: return "missing root";
    case V::missing_start: return "missing start";
    case V::missing_end: return "missing end";
    case V::dangling_arc: return "dangling arc";
    case V::empty_endpoint: return "empty endpoint";
    case V::composite_mismatch: return "composite mismatch";
    case V::cyclic_branch: return "cyclic branch";
    case V::unknown_net: return "unknown net";
    case V::unreachable_state: return "unreachable state";
    case V::probability_sum: return "probability sum";
    case V::rule_table: return "rule table";
    case V::ambiguous_transitions: return "ambiguous transitions";
    case V::terminal_exit: return "terminal exit";
    case V::unresolved_task: return "unresolved task";
  }
  return "?";
}

// GoalNet -----------------------------------------------------------------

const GoalState* GoalNet::find_state(std::string_view state_id) const {
  for (const auto& s : states) {
    if (s.id == state_id) return &s;
  }
  return nullptr;
}

const Transition* GoalNet::find_transition(std::string_view transition_id) const {
  for (const auto& t : transitions) {
    if (t.id == transition_id) return &t;
  }
  return nullptr;
}

const GoalState& GoalNet::state(std::string_view state_id) const {
  if (const auto* s = find_state(state_id)) return *s;
  throw GoalNetError("net '" + id + "' has no state '" + std::string(state_id) + "'");
}

const Transition& GoalNet::transition(std::string_view transition_id) const {
  if (const auto* t = find_transition(transition_id)) return *t;
  throw GoalNetError("net '" + id + "' has no transition '" + std::string(transition_id) + "'");
}

const GoalState& GoalNet::root() const {
  for (const auto& s : states) {
    if (s.kind == GoalKind::root) return s;
  }
  throw GoalNetError("net '" + id + "' has no root");
}

const GoalState& GoalNet::start() const {
  for (const auto& s : states) {
    if (s.is_start) return s;
  }
  throw GoalNetError("net '" + id + "' has no start state");
}

bool GoalNet::is_end(std::string_view state_id) const {
  const auto* s = find_state(state_id);
  return s != nullptr && s->is_end;
}

std::vector<const Transition*> GoalNet::outgoing(std::string_view state_id) const {
  std::vector<const Transition*> out;
  for (const auto& t : transitions) {
    if (contains(t.pre, state_id)) out.push_back(&t);
  }
  return out;
}

// Validation ----------------------------------------------------------------

void validate(const GoalNet& net) {
  using V = ValidationError::Violation;
  const std::string where = "net '" + net.id + "'";

  std::set<std::string> ids;
  std::size_t roots = 0, starts = 0, ends = 0;
  for (const auto& s : net.states) {
    if (!ids.insert(s.id).second) fail(V::duplicate_id, where + ": state '" + s.id + "' declared twice");
    if (s.kind == GoalKind::root) ++roots;
    if (s.is_start) ++starts;
    if (s.is_end) ++ends;
    if ((s.kind == GoalKind::composite) != s.sub_net.has_value()) {
      fail(V::composite_mismatch, where + ": state '" + s.id + "' must have a sub_net iff composite");
    }
    if (s.kind == GoalKind::root && (s.is_start || s.is_end)) {
      fail(V::missing_start, where + ": root '" + s.id + "' cannot be a start or end state");
    }
  }
  if (roots != 1) fail(V::missing_root, where + ": expected exactly one root state, found " + std::to_string(roots));
  if (starts != 1) fail(V::missing_start, where + ": expected exactly one start state, found " + std::to_string(starts));
  if (ends == 0) fail(V::missing_end, where + ": no end state");

  // Branch links must mirror composite sub_net fields one-to-one.
  std::set<std::string> branched;
  for (const auto& b : net.branches) {
    const auto* s = net.find_state(b.state);
    if (s == nullptr || s->kind != GoalKind::composite || *s->sub_net != b.net) {
      fail(V::composite_mismatch, where + ": branch " + b.state + " -> " + b.net + " does not match a composite state");
    }
    if (!branched.insert(b.state).second) fail(V::composite_mismatch, where + ": composite '" + b.state + "' branched twice");
  }
  for (const auto& s : net.states) {
    if (s.kind == GoalKind::composite && !branched.count(s.id)) {
      fail(V::composite_mismatch, where + ": composite '" + s.id + "' has no branch");
    }
    if (s.kind == GoalKind::composite && *s.sub_net == net.id) {
      fail(V::cyclic_branch, where + ": composite '" + s.id + "' branches to its own net");
    }
  }

  std::set<std::string> tids;
  for (const auto& t : net.transitions) {
    const std::string tw = where + " transition '" + t.id + "'";
    if (!tids.insert(t.id).second) fail(V::duplicate_id, tw + " declared twice");
    if (t.pre.empty() || t.post.empty()) fail(V::empty_endpoint, tw + " needs nonempty pre and post sets");
    for (const auto& sid : t.pre) {
      const auto* s = net.find_state(sid);
      if (s == nullptr) fail(V::dangling_arc, tw + " pre state '" + sid + "' is not declared");
      if (s->kind == GoalKind::root) fail(V::dangling_arc, tw + " cannot leave the root goal");
      if (s->is_end) fail(V::terminal_exit, tw + " leaves end state '" + sid + "'");
    }
    for (const auto& sid : t.post) {
      const auto* s = net.find_state(sid);
      if (s == nullptr) fail(V::dangling_arc, tw + " post state '" + sid + "' is not declared");
      if (s->kind == GoalKind::root) fail(V::dangling_arc, tw + " cannot enter the root goal");
    }
    for (const auto& r : t.rules) {
      if (r.task && !contains(t.tasks, *r.task)) fail(V::rule_table, tw + " rule names task '" + *r.task + "' outside its task list");
      if (r.post && !contains(t.post, *r.post)) fail(V::rule_table, tw + " rule names successor '" + *r.post + "' outside its post set");
      if (!r.task && !r.post) fail(V::rule_table, tw + " has a rule selecting nothing");
    }
    switch (t.strategy) {
      case SelectionStrategy::rule_based: {
        const bool task_rules = std::any_of(t.rules.begin(), t.rules.end(), [](const auto& r) { return r.task.has_value(); });
        if (!task_rules && !t.has_branch_rules()) fail(V::rule_table, tw + " is rule_based but has no rules");
        break;
      }
      case SelectionStrategy::probabilistic: {
        if (t.probabilities.empty()) fail(V::probability_sum, tw + " is probabilistic but declares no weights");
        double sum = 0.0;
        for (const auto& [task, w] : t.probabilities) {
          if (!contains(t.tasks, task)) fail(V::probability_sum, tw + " weights unknown task '" + task + "'");
          if (w < 0.0) fail(V::probability_sum, tw + " has a negative weight");
          sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) fail(V::probability_sum, tw + " weights sum to " + std::to_string(sum));
        break;
      }
      case SelectionStrategy::sequential:
        break;
    }
  }

  for (const auto& a : net.arcs) {
    const auto* t = net.find_transition(a.transition);
    if (t == nullptr || net.find_state(a.from) == nullptr || net.find_state(a.to) == nullptr) {
      fail(V::dangling_arc, where + ": arc " + a.from + " -[" + a.transition + "]-> " + a.to + " references an undeclared element");
    }
    if (!contains(t->pre, a.from) || !contains(t->post, a.to)) {
      fail(V::dangling_arc, where + ": arc " + a.from + " -[" + a.transition + "]-> " + a.to + " disagrees with the transition's pre/post sets");
    }
  }
  // Every pre x post pair must be drawn as an arc.
  std::set<Arc> arcset(net.arcs.begin(), net.arcs.end());
  for (const auto& t : net.transitions) {
    for (const auto& from : t.pre) {
      for (const auto& to : t.post) {
        if (!arcset.count(Arc{from, t.id, to})) {
          fail(V::dangling_arc, where + ": missing arc " + from + " -[" + t.id + "]-> " + to);
        }
      }
    }
  }

  // Two transitions leaving one state must either fork together or be
  // guarded by mutually exclusive triggers.
  for (const auto& s : net.states) {
    auto out = net.outgoing(s.id);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        const auto* a = out[i];
        const auto* b = out[j];
        const bool same_fork = a->fork_group && b->fork_group && *a->fork_group == *b->fork_group;
        if (!same_fork && !exclusive(a->trigger, b->trigger)) {
          fail(V::ambiguous_transitions, where + ": '" + a->id + "' and '" + b->id + "' can both fire from '" + s.id + "'");
        }
      }
    }
  }

  // Every non-root state is reachable from the start state.
  const std::string start = net.start().id;
  std::set<std::string> seen{start};
  std::deque<std::string> queue{start};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const auto& a : net.arcs) {
      if (a.from == cur && seen.insert(a.to).second) queue.push_back(a.to);
    }
  }
  bool end_reached = false;
  for (const auto& s : net.states) {
    if (s.kind == GoalKind::root) continue;
    if (!seen.count(s.id)) fail(V::unreachable_state, where + ": state '" + s.id + "' is unreachable from start");
    end_reached = end_reached || s.is_end;
  }
  if (!end_reached) fail(V::missing_end, where + ": no end state reachable from start");
}

// NetLibrary ------------------------------------------------------------------

void NetLibrary::add(GoalNet net) {
  if (nets_.count(net.id)) {
    throw ValidationError(ValidationError::Violation::duplicate_id, "net '" + net.id + "' loaded twice");
  }
  order_.push_back(net.id);
  auto id = net.id;
  nets_.emplace(std::move(id), std::make_shared<const GoalNet>(std::move(net)));
}

const GoalNet* NetLibrary::find(std::string_view net_id) const {
  auto it = nets_.find(net_id);
  return it == nets_.end() ? nullptr : it->second.get();
}

const GoalNet& NetLibrary::get(std::string_view net_id) const {
  if (const auto* n = find(net_id)) return *n;
  throw ValidationError(ValidationError::Violation::unknown_net, "no net '" + std::string(net_id) + "' loaded");
}

std::vector<std::string> NetLibrary::ids() const { return order_; }

void NetLibrary::validate() const {
  using V = ValidationError::Violation;
  for (const auto& id : order_) {
    for (const auto& b : get(id).branches) {
      if (!find(b.net)) fail(V::unknown_net, "net '" + id + "' branches to unknown net '" + b.net + "'");
    }
  }
  // DFS colouring over branch links.
  std::map<std::string, int, std::less<>> colour;
  std::function<void(const std::string&, std::vector<std::string>&)> visit =
      [&](const std::string& id, std::vector<std::string>& path) {
        colour[id] = 1;
        path.push_back(id);
        for (const auto& b : get(id).branches) {
          const int c = colour[b.net];
          if (c == 1) {
            std::string chain;
            for (const auto& p : path) chain += p + " -> ";
            fail(V::cyclic_branch, "branch cycle " + chain + b.net);
          }
          if (c == 0) visit(b.net, path);
        }
        path.pop_back();
        colour[id] = 2;
      };
  for (const auto& id : order_) {
    if (colour[id] == 0) {
      std::vector<std::string> path;
      visit(id, path);
    }
  }
}

std::size_t NetLibrary::branch_depth(std::string_view net_id) const {
  std::size_t best = 0;
  for (const auto& b : get(net_id).branches) best = std::max(best, branch_depth(b.net));
  return best + 1;
}

// JSON exchange ----------------------------------------------------------------

GoalNet goalnet_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("goal net document must be an object");
  if (auto it = doc.find("format"); it != doc.end() && *it != kFormatVersion) {
    throw ParseError("unsupported goal net format " + it->dump());
  }
  GoalNet net;
  const Json& header = require(doc, "net", "document");
  net.id = require_string(header, "id", "net");
  net.description = optional_string(header, "description");

  const std::string where = "net '" + net.id + "'";
  const Json& states = require(doc, "states", where);
  if (!states.is_array()) throw ParseError(where + ": 'states' must be an array");
  for (const auto& js : states) {
    GoalState s;
    s.id = require_string(js, "id", where + " state");
    s.description = optional_string(js, "description");
    s.kind = parse_enum(kKinds, js.value("kind", std::string("atomic")), "goal kind");
    if (auto it = js.find("sub_net"); it != js.end() && !it->is_null()) s.sub_net = it->get<std::string>();
    s.is_start = js.value("start", false);
    s.is_end = js.value("end", false);
    if (auto it = js.find("reward"); it != js.end()) {
      if (!it->is_number()) throw ParseError(where + ": reward of '" + s.id + "' must be a number");
      s.reward = it->get<double>();
    }
    net.states.push_back(std::move(s));
  }

  const Json& transitions = require(doc, "transitions", where);
  if (!transitions.is_array()) throw ParseError(where + ": 'transitions' must be an array");
  for (const auto& jt : transitions) {
    Transition t;
    t.id = require_string(jt, "id", where + " transition");
    const std::string tw = where + " transition '" + t.id + "'";
    t.description = optional_string(jt, "description");
    if (auto it = jt.find("trigger"); it != jt.end()) t.trigger = condition_from_json(*it, tw);
    t.tasks = string_list(jt, "tasks", tw, false);
    t.pre = string_list(jt, "pre", tw, true);
    t.post = string_list(jt, "post", tw, true);
    t.strategy = parse_enum(kStrategies, jt.value("strategy", std::string("sequential")), "selection strategy");
    if (auto it = jt.find("rules"); it != jt.end()) {
      for (const auto& jr : *it) {
        ChoiceRule r;
        r.when = condition_from_json(jr.contains("when") ? jr.at("when") : Json(), tw);
        if (auto k = jr.find("task"); k != jr.end()) r.task = k->get<std::string>();
        if (auto k = jr.find("post"); k != jr.end()) r.post = k->get<std::string>();
        t.rules.push_back(std::move(r));
      }
    }
    if (auto it = jt.find("probabilities"); it != jt.end()) {
      for (const auto& jp : *it) {
        if (!jp.contains("weight") || !jp.at("weight").is_number()) throw ParseError(tw + ": probability entry needs a numeric weight");
        t.probabilities.emplace_back(require_string(jp, "task", tw), jp.at("weight").get<double>());
      }
    }
    if (auto it = jt.find("fork_group"); it != jt.end()) t.fork_group = it->get<std::string>();
    if (auto it = jt.find("thread"); it != jt.end()) t.thread = it->get<std::string>();
    net.transitions.push_back(std::move(t));
  }

  if (auto it = doc.find("arcs"); it != doc.end()) {
    for (const auto& ja : *it) {
      net.arcs.push_back(Arc{require_string(ja, "from", where + " arc"),
                             require_string(ja, "transition", where + " arc"),
                             require_string(ja, "to", where + " arc")});
    }
  } else {
    for (const auto& t : net.transitions) {
      for (const auto& from : t.pre) {
        for (const auto& to : t.post) net.arcs.push_back(Arc{from, t.id, to});
      }
    }
  }

  if (auto it = doc.find("branches"); it != doc.end()) {
    for (const auto& jb : *it) {
      net.branches.push_back(Branch{require_string(jb, "state", where + " branch"),
                                    require_string(jb, "net", where + " branch")});
    }
  }
  return net;
}

Json to_json(const GoalNet& net) {
  Json doc;
  doc["format"] = kFormatVersion;
  doc["net"] = {{"id", net.id}, {"description", net.description}};

  Json states = Json::array();
  for (const auto& s : net.states) {
    Json js{{"id", s.id}, {"description", s.description}, {"kind", to_string(s.kind)}};
    if (s.sub_net) js["sub_net"] = *s.sub_net;
    if (s.is_start) js["start"] = true;
    if (s.is_end) js["end"] = true;
    if (s.reward != 1.0) js["reward"] = s.reward;
    states.push_back(std::move(js));
  }
  doc["states"] = std::move(states);

  Json transitions = Json::array();
  for (const auto& t : net.transitions) {
    Json jt{{"id", t.id}, {"description", t.description}, {"tasks", t.tasks},
            {"pre", t.pre}, {"post", t.post}, {"strategy", to_string(t.strategy)}};
    if (!t.trigger.empty()) jt["trigger"] = to_json(t.trigger);
    if (!t.rules.empty()) {
      Json rules = Json::array();
      for (const auto& r : t.rules) {
        Json jr{{"when", to_json(r.when)}};
        if (r.task) jr["task"] = *r.task;
        if (r.post) jr["post"] = *r.post;
        rules.push_back(std::move(jr));
      }
      jt["rules"] = std::move(rules);
    }
    if (!t.probabilities.empty()) {
      Json probs = Json::array();
      for (const auto& [task, w] : t.probabilities) probs.push_back({{"task", task}, {"weight", w}});
      jt["probabilities"] = std::move(probs);
    }
    if (t.fork_group) jt["fork_group"] = *t.fork_group;
    if (t.thread) jt["thread"] = *t.thread;
    transitions.push_back(std::move(jt));
  }
  doc["transitions"] = std::move(transitions);

  Json arcs = Json::array();
  for (const auto& a : net.arcs) arcs.push_back({{"from", a.from}, {"transition", a.transition}, {"to", a.to}});
  doc["arcs"] = std::move(arcs);

  Json branches = Json::array();
  for (const auto& b : net.branches) branches.push_back({{"state", b.state}, {"net", b.net}});
  doc["branches"] = std::move(branches);
  return doc;
}

namespace {

Json parse_document(std::string_view text) {
  try {
    return parse_json(text, "goal net");
  } catch (const DocumentError& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

GoalNet load_goalnet(std::string_view text) {
  GoalNet net = goalnet_from_json(parse_document(text));
  validate(net);
  return net;
}

NetLibrary load_goalnet_bundle(std::string_view text) {
  const Json doc = parse_document(text);
  NetLibrary lib;
  if (doc.is_object() && doc.contains("nets")) {
    for (const auto& jn : doc.at("nets")) {
      GoalNet net = goalnet_from_json(jn);
      validate(net);
      lib.add(std::move(net));
    }
  } else {
    GoalNet net = goalnet_from_json(doc);
    validate(net);
    lib.add(std::move(net));
  }
  lib.validate();
  return lib;
}

NetLibrary load_library_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  NetLibrary lib;
  for (const auto& f : files) {
    GoalNet net = goalnet_from_json(parse_document(read_text_file(f)));
    validate(net);
    lib.add(std::move(net));
  }
  lib.validate();
  return lib;
}

std::string serialize(const GoalNet& net) { return to_json(net).dump(2) + "\n"; }

std::string serialize_bundle(const NetLibrary& library) {
  Json nets = Json::array();
  for (const auto& id : library.ids()) nets.push_back(to_json(library.get(id)));
  return Json{{"format", kFormatVersion}, {"nets", std::move(nets)}}.dump(2) + "\n";
}

}  // namespace ata::goalnet
