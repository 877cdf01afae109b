#include "ata/teach/knowledge.hpp"

#include <algorithm>
#include <functional>

namespace ata::teach {

namespace {

template <typename F>
auto guarded(std::string_view what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw TeachError("malformed " + std::string(what) + ": " + e.what());
  }
}

std::string substitute(std::string text, const std::string& from, const std::string& to) {
  auto replace = [&](const std::string& key, const std::string& value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
      text.replace(pos, key.size(), value);
    }
  };
  replace("{from}", from);
  replace("{to}", to);
  return text;
}

std::vector<Predicate> dedupe(const std::vector<Predicate>& in) {
  std::vector<Predicate> out;
  for (const auto& p : in) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

}  // namespace

// Concept maps -------------------------------------------------------------

const MapNode* ConceptMap::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

ConceptMap concept_map_from_json(const Json& j) {
  return guarded("concept map", [&] {
    ConceptMap m;
    m.map_id = j.value("map_id", std::string{});
    m.topic = j.value("topic", std::string{});
    for (const auto& n : j.at("nodes")) {
      std::string id = n.at("id").get<std::string>();
      m.nodes.push_back({id, n.value("label", id)});
    }
    for (const auto& l : j.value("links", Json::array())) {
      m.links.push_back({l.at("from").get<std::string>(), l.at("to").get<std::string>(),
                         l.at("relation").get<std::string>()});
    }
    return m;
  });
}

Json to_json(const ConceptMap& m) {
  Json nodes = Json::array(), links = Json::array();
  for (const auto& n : m.nodes) nodes.push_back({{"id", n.id}, {"label", n.label}});
  for (const auto& l : m.links) links.push_back({{"from", l.from}, {"to", l.to}, {"relation", l.relation}});
  return Json{{"format", "conceptmap/1"}, {"map_id", m.map_id}, {"topic", m.topic}, {"nodes", nodes}, {"links", links}};
}

Vocabulary Vocabulary::from_json(const Json& j) {
  return guarded("vocabulary", [&] {
    Vocabulary v;
    for (const auto& [name, jt] : j.at("relations").items()) {
      RelationTemplate t;
      const std::string kind = jt.value("kind", std::string("implies"));
      if (kind == "implies") {
        t.kind = RelationTemplate::Kind::implies;
      } else if (kind == "conjunction") {
        t.kind = RelationTemplate::Kind::conjunction;
      } else {
        throw TeachError("relation '" + name + "': unknown kind '" + kind + "'");
      }
      if (jt.contains("premises")) t.premises = jt.at("premises").get<std::vector<std::string>>();
      t.conclusion = jt.value("conclusion", t.conclusion);
      if (t.premises.empty()) throw TeachError("relation '" + name + "' has no premise template");
      v.relations[name] = t;
    }
    return v;
  });
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_json(load_json_file(path)); }

Json Vocabulary::to_json() const {
  Json rel = Json::object();
  for (const auto& [name, t] : relations) {
    rel[name] = {{"kind", t.kind == RelationTemplate::Kind::implies ? "implies" : "conjunction"},
                 {"premises", t.premises},
                 {"conclusion", t.conclusion}};
  }
  return Json{{"format", "vocabulary/1"}, {"relations", rel}};
}

std::string_view to_string(Diagnostic::Code c) {
  switch (c) {
    case Diagnostic::Code::dangling_endpoint: return "DanglingEndpoint";
    case Diagnostic::Code::self_loop: return "SelfLoop";
    case Diagnostic::Code::unknown_relation: return "UnknownRelation";
    case Diagnostic::Code::duplicate_link: return "DuplicateLink";
    case Diagnostic::Code::duplicate_node: return "DuplicateNode";
    case Diagnostic::Code::isolated_node: return "IsolatedNode";
  }
  return "?";
}

Json to_json(const Diagnostic& d) {
  return Json{{"code", to_string(d.code)},
              {"severity", d.warning ? "warning" : "error"},
              {"where", d.where},
              {"message", d.message}};
}

std::vector<Diagnostic> check_syntax(const ConceptMap& map, const Vocabulary& vocab) {
  using Code = Diagnostic::Code;
  std::vector<Diagnostic> out;
  std::set<std::string> ids;
  for (const auto& n : map.nodes) {
    if (!ids.insert(n.id).second) out.push_back({Code::duplicate_node, false, n.id, "node '" + n.id + "' declared twice"});
  }
  std::set<std::string> linked;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t i = 0; i < map.links.size(); ++i) {
    const auto& l = map.links[i];
    const std::string where = "links[" + std::to_string(i) + "]";
    for (const auto* end : {&l.from, &l.to}) {
      if (!ids.count(*end)) out.push_back({Code::dangling_endpoint, false, where, "no node '" + *end + "'"});
    }
    if (l.from == l.to) out.push_back({Code::self_loop, false, where, "'" + l.from + "' links to itself"});
    if (!vocab.knows(l.relation)) {
      out.push_back({Code::unknown_relation, false, where, "relation '" + l.relation + "' is not in the vocabulary"});
    }
    if (!seen.emplace(l.from, l.to, l.relation).second) {
      out.push_back({Code::duplicate_link, false, where,
                     "(" + l.from + ", " + l.to + ", " + l.relation + ") appears more than once"});
    }
    linked.insert(l.from);
    linked.insert(l.to);
  }
  for (const auto& n : map.nodes) {
    if (!linked.count(n.id)) out.push_back({Code::isolated_node, true, n.id, "'" + n.label + "' has no links"});
  }
  return out;
}

bool accepted(const std::vector<Diagnostic>& diagnostics) {
  return std::all_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.warning; });
}

// Rules --------------------------------------------------------------------

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::taught: return "taught";
    case Provenance::built_in: return "built_in";
    case Provenance::authored: return "authored";
  }
  return "?";
}

Provenance provenance_from_string(std::string_view name) {
  if (name == "taught") return Provenance::taught;
  if (name == "built_in") return Provenance::built_in;
  if (name == "authored") return Provenance::authored;
  throw TeachError("unknown provenance '" + std::string(name) + "'");
}

bool Rule::same_logic(const Rule& other) const {
  if (conclusion != other.conclusion) return false;
  return std::set<Predicate>(premises.begin(), premises.end()) ==
         std::set<Predicate>(other.premises.begin(), other.premises.end());
}

void Rule::check() const {
  if (premises.empty()) throw TeachError("rule for '" + conclusion + "' has no premises");
  if (conclusion.empty()) throw TeachError("rule without a conclusion");
  if (std::find(premises.begin(), premises.end(), conclusion) != premises.end()) {
    throw TeachError("rule concludes its own premise '" + conclusion + "'");
  }
}

std::string Rule::str() const {
  std::string out;
  for (std::size_t i = 0; i < premises.size(); ++i) out += (i ? " & " : "") + premises[i];
  return out + " -> " + conclusion;
}

Json to_json(const Rule& r) {
  return Json{{"premises", r.premises}, {"conclusion", r.conclusion}, {"provenance", to_string(r.provenance)}};
}

Rule rule_from_json(const Json& j) {
  return guarded("rule", [&] {
    Rule r{dedupe(j.at("premises").get<std::vector<Predicate>>()), j.at("conclusion").get<std::string>(),
           provenance_from_string(j.value("provenance", std::string("taught")))};
    r.check();
    return r;
  });
}

std::vector<Rule> compile_map(const ConceptMap& map, const Vocabulary& vocab) {
  std::vector<Rule> out;
  // Conjunctions collect per conclusion, in first-seen order.
  std::vector<std::pair<Predicate, std::vector<Predicate>>> conj;
  for (const auto& l : map.links) {
    auto it = vocab.relations.find(l.relation);
    if (it == vocab.relations.end()) throw UnknownRelation("relation '" + l.relation + "' is not in the vocabulary");
    const MapNode* a = map.node(l.from);
    const MapNode* b = map.node(l.to);
    if (!a || !b) throw TeachError("link " + l.from + " -> " + l.to + " has a missing endpoint");
    const RelationTemplate& t = it->second;
    std::vector<Predicate> premises;
    for (const auto& p : t.premises) premises.push_back(substitute(p, a->label, b->label));
    const Predicate conclusion = substitute(t.conclusion, a->label, b->label);
    if (t.kind == RelationTemplate::Kind::implies) {
      out.push_back({dedupe(premises), conclusion, Provenance::taught});
      continue;
    }
    auto slot = std::find_if(conj.begin(), conj.end(), [&](const auto& c) { return c.first == conclusion; });
    if (slot == conj.end()) {
      conj.emplace_back(conclusion, premises);
    } else {
      slot->second.insert(slot->second.end(), premises.begin(), premises.end());
    }
  }
  for (auto& [conclusion, premises] : conj) out.push_back({dedupe(premises), conclusion, Provenance::taught});
  std::vector<Rule> unique;
  for (auto& r : out) {
    r.check();
    if (std::none_of(unique.begin(), unique.end(), [&](const Rule& u) { return u.same_logic(r); })) unique.push_back(r);
  }
  return unique;
}

// Knowledge points and the knowledge base -----------------------------------

const KnowledgePoint* PointCatalog::find(int id) const {
  for (const auto& p : points) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const KnowledgePoint& PointCatalog::at(int id) const {
  if (const auto* p = find(id)) return *p;
  throw UnknownPoint("no knowledge point " + std::to_string(id));
}

std::set<int> PointCatalog::ids() const {
  std::set<int> out;
  for (const auto& p : points) out.insert(p.id);
  return out;
}

PointCatalog PointCatalog::from_json(const Json& j) {
  return guarded("knowledge points", [&] {
    PointCatalog c;
    for (const auto& p : j.at("points")) {
      KnowledgePoint kp{p.at("id").get<int>(), p.at("name").get<std::string>(), p.value("description", std::string{}),
                        p.value("scene", std::string{})};
      if (c.find(kp.id)) throw TeachError("knowledge point " + std::to_string(kp.id) + " declared twice");
      c.points.push_back(kp);
    }
    return c;
  });
}

PointCatalog PointCatalog::load(const std::filesystem::path& path) { return from_json(load_json_file(path)); }

Json PointCatalog::to_json() const {
  Json pts = Json::array();
  for (const auto& p : points) {
    pts.push_back({{"id", p.id}, {"name", p.name}, {"description", p.description}, {"scene", p.scene}});
  }
  return Json{{"format", "knowledge_points/1"}, {"points", pts}};
}

std::size_t KnowledgeBase::add_rules(const std::vector<Rule>& more) {
  std::size_t added = 0;
  for (const auto& r : more) {
    r.check();
    if (std::any_of(rules.begin(), rules.end(), [&](const Rule& have) { return have.same_logic(r); })) continue;
    rules.push_back(r);
    ++added;
  }
  return added;
}

void KnowledgeBase::learn(const std::set<int>& points, const PointCatalog& catalog) {
  for (int p : points) catalog.at(p);
  learned_points.insert(points.begin(), points.end());
}

void KnowledgeBase::record_mistake(int point, double time, const PointCatalog& catalog) {
  catalog.at(point);
  mistakes.push_back({point, time});
}

bool KnowledgeBase::mistaken(int point) const {
  return std::any_of(mistakes.begin(), mistakes.end(), [&](const Mistake& m) { return m.point == point; });
}

Json KnowledgeBase::to_json() const {
  Json rs = Json::array(), ms = Json::array();
  for (const auto& r : rules) rs.push_back(teach::to_json(r));
  for (const auto& m : mistakes) ms.push_back({{"point", m.point}, {"time", m.time}});
  return Json{{"rules", rs}, {"facts", facts}, {"actions", actions}, {"learned_points", learned_points}, {"mistakes", ms}};
}

KnowledgeBase KnowledgeBase::from_json(const Json& j) {
  return guarded("knowledge base", [&] {
    KnowledgeBase kb;
    for (const auto& r : j.value("rules", Json::array())) kb.rules.push_back(rule_from_json(r));
    kb.facts = j.value("facts", std::set<Predicate>{});
    kb.actions = j.value("actions", std::map<Predicate, std::string>{});
    kb.learned_points = j.value("learned_points", std::set<int>{});
    for (const auto& m : j.value("mistakes", Json::array())) kb.mistakes.push_back({m.at("point"), m.at("time")});
    return kb;
  });
}

KnowledgeBase load_builtins(const std::filesystem::path& path) {
  KnowledgeBase kb = KnowledgeBase::from_json(load_json_file(path));
  for (auto& r : kb.rules) r.provenance = Provenance::built_in;
  return kb;
}

// Inference ----------------------------------------------------------------

namespace {

struct Chase {
  std::map<Predicate, std::size_t> round;     // round in which each predicate appeared
  std::map<Predicate, std::size_t> by_rule;   // first rule that derived it
};

Chase chase(const KnowledgeBase& kb) {
  Chase c;
  for (const auto& f : kb.facts) c.round.emplace(f, 0);
  for (const auto& [p, _] : kb.actions) c.round.emplace(p, 0);
  for (std::size_t r = 1;; ++r) {
    std::vector<std::pair<Predicate, std::size_t>> fresh;
    for (std::size_t i = 0; i < kb.rules.size(); ++i) {
      const Rule& rule = kb.rules[i];
      if (c.round.count(rule.conclusion)) continue;
      const bool fires = std::all_of(rule.premises.begin(), rule.premises.end(), [&](const Predicate& p) {
        auto it = c.round.find(p);
        return it != c.round.end() && it->second < r;
      });
      if (fires && std::none_of(fresh.begin(), fresh.end(), [&](const auto& f) { return f.first == rule.conclusion; })) {
        fresh.emplace_back(rule.conclusion, i);
      }
    }
    if (fresh.empty()) return c;
    for (const auto& [p, i] : fresh) {
      c.round.emplace(p, r);
      c.by_rule.emplace(p, i);
    }
  }
}

Derivation derive(const KnowledgeBase& kb, const Chase& c, const Predicate& p) {
  Derivation d;
  d.predicate = p;
  if (kb.facts.count(p)) return d;
  if (auto a = kb.actions.find(p); a != kb.actions.end()) {
    d.via = Derivation::Via::action;
    d.action = a->second;
    return d;
  }
  d.via = Derivation::Via::rule;
  d.rule = c.by_rule.at(p);
  for (const auto& q : kb.rules[d.rule].premises) d.premises.push_back(derive(kb, c, q));
  return d;
}

void collect_steps(const Derivation& d, std::vector<std::string>& steps) {
  if (d.via == Derivation::Via::action) {
    if (std::find(steps.begin(), steps.end(), d.action) == steps.end()) steps.push_back(d.action);
    return;
  }
  for (const auto& p : d.premises) collect_steps(p, steps);
}

}  // namespace

std::set<Predicate> closure(const KnowledgeBase& kb) {
  std::set<Predicate> out;
  for (const auto& [p, _] : chase(kb).round) out.insert(p);
  return out;
}

Json to_json(const Derivation& d) {
  Json j{{"predicate", d.predicate}};
  switch (d.via) {
    case Derivation::Via::fact:
      j["via"] = "fact";
      break;
    case Derivation::Via::action:
      j["via"] = "action";
      j["action"] = d.action;
      break;
    case Derivation::Via::rule: {
      j["via"] = "rule";
      j["rule"] = d.rule;
      Json ps = Json::array();
      for (const auto& p : d.premises) ps.push_back(to_json(p));
      j["premises"] = ps;
      break;
    }
  }
  return j;
}

Json to_json(const ActionPlan& p) {
  return Json{{"goal", p.goal}, {"steps", p.steps}, {"justification", to_json(p.justification)}};
}

std::variant<ActionPlan, NoSolution> forward_chain(const KnowledgeBase& kb, const Predicate& goal) {
  const Chase c = chase(kb);
  if (!c.round.count(goal)) return NoSolution{goal};
  ActionPlan plan;
  plan.goal = goal;
  plan.justification = derive(kb, c, goal);
  collect_steps(plan.justification, plan.steps);
  return plan;
}

std::vector<std::vector<std::string>> causal_paths(const ConceptMap& map, std::string_view from, std::string_view to) {
  std::vector<std::vector<std::string>> out;
  auto id_of = [&](std::string_view label) -> std::string {
    for (const auto& n : map.nodes) {
      if (n.label == label) return n.id;
    }
    return {};
  };
  const std::string start = id_of(from), goal = id_of(to);
  if (start.empty() || goal.empty()) return out;
  std::vector<std::string> path{start};
  std::function<void(const std::string&)> walk = [&](const std::string& at) {
    if (at == goal && path.size() > 1) {
      std::vector<std::string> labels;
      for (const auto& id : path) labels.push_back(map.node(id)->label);
      out.push_back(labels);
      return;
    }
    for (const auto& l : map.links) {
      if (l.from != at || !map.node(l.to)) continue;
      if (std::find(path.begin(), path.end(), l.to) != path.end()) continue;
      path.push_back(l.to);
      walk(l.to);
      path.pop_back();
    }
  };
  walk(start);
  return out;
}

// Panels and hints ----------------------------------------------------------

Json TeachingPanel::to_json() const {
  Json j{{"panel_id", panel_id}, {"kind", kind}, {"difficulty", difficulty}, {"covered_points", covered_points}};
  if (!map_id.empty()) j["map_id"] = map_id;
  return j;
}

TeachingPanel TeachingPanel::from_json(const Json& j) {
  return guarded("panel", [&] {
    TeachingPanel p{j.at("panel_id").get<std::string>(), j.at("kind").get<std::string>(), j.at("difficulty").get<int>(),
                    j.at("covered_points").get<std::set<int>>(), j.value("map_id", std::string{})};
    if (p.kind != "concept_map" && p.kind != "experiment") throw TeachError("panel kind '" + p.kind + "'");
    if (p.difficulty < 1) throw TeachError("panel difficulty must be positive");
    return p;
  });
}

std::vector<TeachingPanel> load_panels(const std::filesystem::path& path) {
  const Json j = load_json_file(path);
  std::vector<TeachingPanel> out;
  guarded("panels", [&] {
    for (const auto& p : j.at("panels")) out.push_back(TeachingPanel::from_json(p));
    return 0;
  });
  return out;
}

std::variant<TeachingPanel, AllDone> select_panel(const KnowledgeBase& kb, const std::vector<TeachingPanel>& panels) {
  const TeachingPanel* best = nullptr;
  auto touches_mistake = [&](const TeachingPanel& p) {
    return std::any_of(p.covered_points.begin(), p.covered_points.end(), [&](int pt) { return kb.mistaken(pt); });
  };
  auto key = [&](const TeachingPanel& p) { return std::make_tuple(!touches_mistake(p), p.difficulty, p.panel_id); };
  for (const auto& p : panels) {
    const bool learnt = std::includes(kb.learned_points.begin(), kb.learned_points.end(), p.covered_points.begin(),
                                      p.covered_points.end());
    if (learnt) continue;
    if (!best || key(p) < key(*best)) best = &p;
  }
  if (!best) return AllDone{};
  return *best;
}

Json to_json(const Hint& h) {
  return Json{{"point", h.point}, {"name", h.name}, {"description", h.description}, {"scene", h.scene}};
}

std::optional<Hint> HintService::on_stall(int point, double stalled_for) {
  const KnowledgePoint& kp = catalog_->at(point);
  if (stalled_for <= threshold_ || hinted_.count(point)) return std::nullopt;
  hinted_.insert(point);
  return Hint{kp.id, kp.name, kp.description, kp.scene};
}

}  // namespace ata::teach
