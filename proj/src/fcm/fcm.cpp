#include "ata/fcm/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ata::fcm {

namespace {

const Activation kIdentity{};

const std::map<std::string, std::vector<std::string>, std::less<>> kKinds{
    {"identity", {}},
    {"distance_normalize", {"scale"}},
    {"likelihood_piecewise", {}},
    {"power", {"exponent"}},
    {"pursuit", {"v_pursuer", "v_max", "d_max", "emotion_max"}},
};

double activate(const Activation& a, const Codomain& cod, double x, const std::vector<double>& fresh,
                const FcmModel& model) {
  if (a.kind == "identity") return cod.clamp(x);
  if (a.kind == "distance_normalize") return cod.clamp(x / a.param("scale"));
  if (a.kind == "likelihood_piecewise") {
    const double c = std::clamp(x, -1.0, 1.0);
    return cod.clamp(c < 0.0 ? (1.0 - std::abs(c)) * (1.0 - std::abs(c)) : c);
  }
  if (a.kind == "power") return cod.clamp(std::pow(std::max(0.0, x), a.param("exponent")));
  if (a.kind == "pursuit") {
    const double d = fresh[model.index_of(a.source)];
    const double ratio = std::clamp(x / a.param("emotion_max"), 0.0, 1.0);
    return cod.clamp(d - (a.param("v_pursuer") - ratio * a.param("v_max")) / a.param("d_max"));
  }
  throw UnknownActivation("unknown activation '" + a.kind + "'");
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::input: return "input";
    case Role::internal: return "internal";
    case Role::emotion: return "emotion";
    case Role::action: return "action";
  }
  return "?";
}

Role role_from_string(std::string_view name) {
  if (name == "input") return Role::input;
  if (name == "internal") return Role::internal;
  if (name == "emotion") return Role::emotion;
  if (name == "action") return Role::action;
  throw FcmError("unknown concept role '" + std::string(name) + "'");
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::fixed_point: return "fixed_point";
    case Outcome::absorbed: return "absorbed";
    case Outcome::max_iterations: return "max_iterations";
  }
  return "?";
}

double Activation::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw UnknownActivation("activation '" + kind + "' lacks parameter '" + key + "'");
  return it->second;
}

std::optional<std::size_t> FcmModel::find(std::string_view concept_id) const {
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (concepts[i].id == concept_id) return i;
  }
  return std::nullopt;
}

std::size_t FcmModel::index_of(std::string_view concept_id) const {
  if (auto i = find(concept_id)) return *i;
  throw FcmError("model '" + name + "' has no concept '" + std::string(concept_id) + "'");
}

const Activation& FcmModel::activation(std::size_t i) const {
  auto it = activations.find(concepts[i].id);
  return it == activations.end() ? kIdentity : it->second;
}

std::vector<std::pair<std::size_t, std::size_t>> FcmModel::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) {
      if (weight(i, j) != 0.0) out.emplace_back(i, j);
    }
  }
  return out;
}

void FcmModel::add_concept(Concept c) {
  if (find(c.id)) throw FcmError("duplicate concept '" + c.id + "'");
  const std::size_t n = size();
  std::vector<double> grown((n + 1) * (n + 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) grown[i * (n + 1) + j] = weights[i * n + j];
  }
  weights = std::move(grown);
  concepts.push_back(std::move(c));
}

void FcmModel::set_weight(std::string_view from, std::string_view to, double w) {
  weight(index_of(from), index_of(to)) = w;
}

void FcmModel::validate() const {
  if (weights.size() != size() * size()) {
    throw DimensionMismatch("model '" + name + "': " + std::to_string(weights.size()) + " weights for " +
                            std::to_string(size()) + " concepts");
  }
  std::set<std::string> ids;
  for (const auto& c : concepts) {
    if (!ids.insert(c.id).second) throw FcmError("model '" + name + "': duplicate concept '" + c.id + "'");
    if (c.codomain.lo > c.codomain.hi) throw FcmError("model '" + name + "': empty codomain for '" + c.id + "'");
  }
  for (const auto& [id, a] : activations) {
    if (!find(id)) throw FcmError("model '" + name + "': activation for unknown concept '" + id + "'");
    auto kind = kKinds.find(a.kind);
    if (kind == kKinds.end()) throw UnknownActivation("model '" + name + "': unknown activation '" + a.kind + "'");
    for (const auto& p : kind->second) a.param(p);
    if (a.kind == "distance_normalize" && a.param("scale") <= 0.0) throw FcmError("scale must be positive");
    if (a.coupled()) {
      auto src = find(a.source);
      if (!src) throw FcmError("model '" + name + "': '" + id + "' reads unknown concept '" + a.source + "'");
      if (activation(*src).coupled()) throw FcmError("coupled activations cannot read each other");
      if (a.param("d_max") <= 0.0 || a.param("emotion_max") <= 0.0) throw FcmError("pursuit scales must be positive");
    }
  }
}

std::vector<double> Trajectory::series(std::size_t concept_index) const {
  std::vector<double> out;
  for (const auto& s : states) out.push_back(s.vector.at(concept_index));
  return out;
}

FcmState fcm_step(const FcmState& state, const FcmModel& model) {
  const std::size_t n = model.size();
  if (state.vector.size() != n || model.weights.size() != n * n) {
    throw DimensionMismatch("state of length " + std::to_string(state.vector.size()) + " for a " +
                            std::to_string(n) + "-concept model");
  }
  std::vector<double> raw(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = state.vector[i];
    if (vi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) raw[j] += vi * model.weight(i, j);
  }
  FcmState next{std::vector<double>(n, 0.0), state.iteration + 1};
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      const Activation& a = model.activation(j);
      if (a.coupled() != (pass == 1)) continue;
      next.vector[j] = activate(a, model.concepts[j].codomain, raw[j], next.vector, model);
    }
  }
  return next;
}

Trajectory simulate(const FcmModel& model, const FcmState& init, const TerminationPolicy& policy,
                    const StepHook& hook) {
  if (policy.epsilon <= 0.0) throw FcmError("epsilon must be positive");
  if (init.vector.size() != model.size()) throw DimensionMismatch("initial state does not match the model");
  std::optional<std::size_t> absorbing;
  if (policy.absorbing) absorbing = model.index_of(policy.absorbing->concept_id);
  auto absorbed = [&](const FcmState& s) {
    if (!absorbing) return false;
    const double v = s.vector[*absorbing];
    return policy.absorbing->op == "ge" ? v >= policy.absorbing->value : v <= policy.absorbing->value;
  };

  FcmModel working;
  const FcmModel* current = &model;
  if (hook) {
    working = model;
    current = &working;
  }

  Trajectory t;
  t.states.push_back(init);
  if (absorbed(init)) {
    t.outcome = Outcome::absorbed;
    return t;
  }
  for (std::size_t k = 0; k < policy.max_iterations; ++k) {
    const FcmState& prev = t.states.back();
    if (hook) hook(prev.iteration + 1, working);
    FcmState next = fcm_step(prev, *current);
    double delta = 0.0;
    for (std::size_t i = 0; i < next.vector.size(); ++i) delta = std::max(delta, std::abs(next.vector[i] - prev.vector[i]));
    t.states.push_back(std::move(next));
    if (absorbed(t.states.back())) {
      t.outcome = Outcome::absorbed;
      return t;
    }
    if (delta < policy.epsilon) {
      t.outcome = Outcome::fixed_point;
      return t;
    }
  }
  t.outcome = Outcome::max_iterations;
  return t;
}

Composition compose(const FcmModel& a, const FcmModel& b,
                    const std::vector<std::pair<std::string, std::string>>& shared) {
  if (shared.empty()) throw NoSharedConcept("models '" + a.name + "' and '" + b.name + "' share no concept");
  a.validate();
  b.validate();

  Composition out;
  out.model = a;
  out.model.name = a.name + "+" + b.name;

  // Position of every b concept in the merged model.
  std::vector<std::size_t> where(b.size(), 0);
  std::vector<bool> merged(b.size(), false);
  for (const auto& [ca, cb] : shared) {
    const std::size_t ia = a.index_of(ca);
    const std::size_t ib = b.index_of(cb);
    if (!(a.concepts[ia].codomain == b.concepts[ib].codomain)) {
      throw CodomainMismatch("'" + ca + "' and '" + cb + "' have different codomains");
    }
    if (merged[ib]) throw FcmError("concept '" + cb + "' paired twice");
    where[ib] = ia;
    merged[ib] = true;
    const Activation& act_a = a.activation(ia);
    const Activation& act_b = b.activation(ib);
    if (!(act_a == act_b)) {
      out.log.push_back("activation of '" + ca + "' kept from " + a.name + " (" + act_a.kind + "), dropped " +
                        act_b.kind + " from " + b.name);
    }
  }
  for (std::size_t ib = 0; ib < b.size(); ++ib) {
    if (merged[ib]) continue;
    Concept c = b.concepts[ib];
    const std::string original = c.id;
    while (out.model.find(c.id)) c.id += "_" + b.name;
    if (c.id != original) out.log.push_back("renamed '" + original + "' from " + b.name + " to '" + c.id + "'");
    out.model.add_concept(c);
    where[ib] = out.model.size() - 1;
    auto act = b.activations.find(original);
    if (act != b.activations.end()) {
      out.model.activations[c.id] = act->second;
    }
  }
  // Coupled sources follow their concept into the merged numbering.
  for (std::size_t ib = 0; ib < b.size(); ++ib) {
    if (merged[ib]) continue;
    auto act = b.activations.find(b.concepts[ib].id);
    if (act != b.activations.end() && act->second.coupled()) {
      out.model.activations[out.model.concepts[where[ib]].id].source =
          out.model.concepts[where[b.index_of(act->second.source)]].id;
    }
  }
  for (const auto& [i, j] : b.edges()) {
    double& w = out.model.weight(where[i], where[j]);
    if (w != 0.0) {
      if (w != b.weight(i, j)) {
        out.log.push_back("edge " + out.model.concepts[where[i]].id + "->" + out.model.concepts[where[j]].id +
                          " kept from " + a.name);
      }
      continue;
    }
    w = b.weight(i, j);
  }
  out.model.validate();
  return out;
}

// Scenario files ------------------------------------------------------------------

StepHook Scenario::hook() const {
  if (overrides.empty()) return {};
  auto copy = overrides;
  return [copy](std::size_t iteration, FcmModel& m) {
    for (const auto& o : copy) {
      if (iteration >= o.from_iteration) m.activations[o.concept_id].params[o.param] = o.value;
    }
  };
}

FcmModel model_from_json(const Json& j) {
  FcmModel m;
  try {
    m.name = j.value("name", std::string("fcm"));
    for (const auto& jc : j.at("concepts")) {
      Concept c;
      c.id = jc.at("id").get<std::string>();
      c.name = jc.value("name", c.id);
      c.role = role_from_string(jc.value("role", std::string("internal")));
      if (jc.contains("codomain")) c.codomain = {jc.at("codomain").at(0).get<double>(), jc.at("codomain").at(1).get<double>()};
      m.concepts.push_back(c);
    }
    const Json& w = j.at("weights");
    for (const auto& row : w) {
      if (row.is_array()) {
        if (row.size() != m.size()) throw DimensionMismatch("weight row of length " + std::to_string(row.size()));
        for (const auto& x : row) m.weights.push_back(x.get<double>());
      } else {
        m.weights.push_back(row.get<double>());
      }
    }
    if (j.contains("activations")) {
      for (const auto& [id, ja] : j.at("activations").items()) {
        Activation a;
        a.kind = ja.value("kind", std::string("identity"));
        if (ja.contains("params")) {
          for (const auto& [k, v] : ja.at("params").items()) a.params[k] = v.get<double>();
        }
        a.source = ja.value("source", std::string{});
        m.activations[id] = a;
      }
    }
  } catch (const Json::exception& e) {
    throw FcmError(std::string("malformed model: ") + e.what());
  }
  m.validate();
  return m;
}

Json to_json(const FcmModel& m) {
  Json concepts = Json::array();
  for (const auto& c : m.concepts) {
    concepts.push_back({{"id", c.id}, {"name", c.name}, {"role", to_string(c.role)}, {"codomain", {c.codomain.lo, c.codomain.hi}}});
  }
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.size(); ++k) row.push_back(m.weight(i, k));
    rows.push_back(row);
  }
  Json acts = Json::object();
  for (const auto& [id, a] : m.activations) {
    Json ja{{"kind", a.kind}};
    if (!a.params.empty()) ja["params"] = a.params;
    if (!a.source.empty()) ja["source"] = a.source;
    acts[id] = ja;
  }
  return Json{{"name", m.name}, {"concepts", concepts}, {"weights", rows}, {"activations", acts}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.model = model_from_json(j);
  try {
    if (j.contains("init")) {
      s.init.vector = j.at("init").get<std::vector<double>>();
    } else {
      s.init.vector.assign(s.model.size(), 0.0);
    }
    if (s.init.vector.size() != s.model.size()) throw DimensionMismatch("init vector does not match the concepts");
    if (j.contains("policy")) {
      const Json& p = j.at("policy");
      s.policy.epsilon = p.value("epsilon", 1e-6);
      s.policy.max_iterations = p.value("max_iterations", std::size_t{1000});
      if (p.contains("absorbing")) {
        const Json& a = p.at("absorbing");
        s.policy.absorbing = Threshold{a.at("concept").get<std::string>(), a.value("op", std::string("le")),
                                       a.value("value", 0.0)};
      }
    }
    if (j.contains("overrides")) {
      for (const auto& o : j.at("overrides")) {
        s.overrides.push_back({o.value("from_iteration", std::size_t{0}), o.at("concept").get<std::string>(),
                               o.at("param").get<std::string>(), o.at("value").get<double>()});
      }
    }
  } catch (const Json::exception& e) {
    throw FcmError(std::string("malformed scenario: ") + e.what());
  }
  if (s.policy.epsilon <= 0.0) throw FcmError("epsilon must be positive");
  if (s.policy.absorbing) s.model.index_of(s.policy.absorbing->concept_id);
  return s;
}

Json to_json(const Scenario& s) {
  Json j = to_json(s.model);
  j["format"] = "fcm/1";
  j["init"] = s.init.vector;
  Json p{{"epsilon", s.policy.epsilon}, {"max_iterations", s.policy.max_iterations}};
  if (s.policy.absorbing) {
    p["absorbing"] = {{"concept", s.policy.absorbing->concept_id}, {"op", s.policy.absorbing->op}, {"value", s.policy.absorbing->value}};
  }
  j["policy"] = p;
  if (!s.overrides.empty()) {
    Json os = Json::array();
    for (const auto& o : s.overrides) {
      os.push_back({{"from_iteration", o.from_iteration}, {"concept", o.concept_id}, {"param", o.param}, {"value", o.value}});
    }
    j["overrides"] = os;
  }
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(load_json_file(path)); }

std::string trajectory_csv(const FcmModel& model, const Trajectory& t) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration";
  for (const auto& c : model.concepts) out << ',' << c.id;
  out << ",outcome\n";
  for (const auto& s : t.states) {
    out << s.iteration;
    for (double v : s.vector) out << ',' << v;
    out << ',' << to_string(t.outcome) << '\n';
  }
  return out.str();
}

}  // namespace ata::fcm
