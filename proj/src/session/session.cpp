#include "ata/session/session.hpp"

#include <algorithm>
#include <random>

#include <cstdio>
#include <limits>

namespace ata::session {

using runtime::SimEvent;

void FifoLock::lock() {
  std::unique_lock lk(mu_);
  const std::uint64_t ticket = next_++;
  cv_.wait(lk, [&] { return serving_ == ticket; });
}

void FifoLock::unlock() {
  {
    std::lock_guard lk(mu_);
    ++serving_;
  }
  cv_.notify_all();
}

SessionManager::SessionManager(SessionOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = [] { return Clock::now(); };
  resources_ = runtime::AgentResources::load(options_.data_root);
  const auto library = authoring::TaskLibrary::load(options_.data_root / "vs" / "task_library.json");
  auto cat = authoring::load_catalog(options_.data_root / "vs" / "catalog.json", resources_->points, library);
  catalogs_.emplace(cat.catalog_id, std::move(cat));

  std::random_device rd;
  id_state_[0] = (std::uint64_t{rd()} << 32) ^ rd();
  id_state_[1] = (std::uint64_t{rd()} << 32) ^ rd();
}

SessionManager::~SessionManager() {
  std::unique_lock lk(mu_);
  for (auto& [id, s] : sessions_) {
    std::lock_guard g(s->log_mu);
    s->closed = true;
    s->log_cv.notify_all();
  }
}

std::string SessionManager::new_id() {
  // 128 bits from a generator seeded by the OS, rehashed per id.
  std::lock_guard lk(id_mu_);
  std::random_device rd;
  std::mt19937_64 gen(id_state_[0] ^ (std::uint64_t{rd()} << 32) ^ rd());
  id_state_[0] = gen();
  id_state_[1] ^= gen();
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(id_state_[0]),
                static_cast<unsigned long long>(id_state_[1] ^ gen()));
  return buf;
}

Json SessionManager::catalogs() const {
  Json out = Json::array();
  for (const auto& [id, cat] : catalogs_) out.push_back(cat.to_json());
  return out;
}

std::size_t SessionManager::size() const {
  std::shared_lock lk(mu_);
  return sessions_.size();
}

std::size_t SessionManager::expire() {
  std::vector<std::shared_ptr<Session>> gone;
  {
    std::unique_lock lk(mu_);
    const auto t = now();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (t - it->second->last_activity > options_.idle_timeout) {
        gone.push_back(it->second);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : gone) {
    std::lock_guard g(s->log_mu);
    s->closed = true;
    s->log_cv.notify_all();
  }
  return gone.size();
}

std::shared_ptr<Session> SessionManager::find(const std::string& session_id) {
  std::shared_ptr<Session> s;
  {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw UnknownSession("no session '" + session_id + "'");
    s = it->second;
  }
  if (now() - s->last_activity > options_.idle_timeout) {
    {
      std::unique_lock lk(mu_);
      sessions_.erase(session_id);
    }
    std::lock_guard g(s->log_mu);
    s->closed = true;
    s->log_cv.notify_all();
    throw SessionExpired("session '" + session_id + "' expired");
  }
  return s;
}

namespace {

/// Records of one request, sorted into what a client wants back.
struct Digest {
  Json emotions = Json::array();
  Json messages = Json::array();
  Json trace = Json::array();
  std::optional<Json> saved;        // save_knowledge detail
  std::optional<Json> diagnostics;  // check_error detail
  bool alerted = false;
  std::optional<Json> practice;
  std::string panel;
};

Digest digest(const std::vector<goalnet::TraceRecord>& records) {
  Digest d;
  for (const auto& r : records) {
    d.trace.push_back(r.to_json());
    if (r.outcome != "advance") continue;
    if (r.task == "execute_expression" && r.detail.contains("emission")) d.emotions.push_back(r.detail.at("emission"));
    if (r.detail.is_object() && r.detail.contains("message")) {
      d.messages.push_back({{"net", r.net}, {"text", r.detail.at("message")}});
    }
    if (r.net == "learn_from_user") {
      if (r.task == "save_knowledge") d.saved = r.detail;
      if (r.task == "check_error") d.diagnostics = r.detail.value("diagnostics", Json::array());
      if (r.task == "message_alert") d.alerted = true;
      if (r.task == "show_approach" && r.detail.contains("panel") && r.detail.at("panel").is_string()) {
        d.panel = r.detail.at("panel");
      }
    }
    if (r.net == "practice") {
      if (r.task == "perceive_input") {
        d.practice = Json{{"goal", r.detail.value("inquiry", "")}, {"plan", nullptr}, {"no_solution", false}};
      }
      if (!d.practice) continue;
      Json& p = *d.practice;
      if (r.task == "generate_plan") p["plan"] = r.detail.at("plan");
      if (r.task == "reasoning" && !r.detail.value("solvable", false)) {
        p["no_solution"] = true;
        p["outcome"] = "no_solution";
      }
      if (r.task == "execute_plan") p["outcome"] = r.detail.value("outcome", "");
      if (r.task == "message_alert") p["message"] = r.detail.at("message");
    }
  }
  return d;
}

}  // namespace

Json SessionManager::run(Session& s, std::vector<SimEvent> events) {
  auto& rt = *s.runtime;
  const std::size_t before = rt.trace().size();
  for (auto& e : events) {
    e.timestamp = rt.now();
    rt.schedule(std::move(e));
  }
  rt.run_until_idle();

  std::vector<goalnet::TraceRecord> fresh(rt.trace().begin() + static_cast<std::ptrdiff_t>(before), rt.trace().end());
  s.seen = rt.trace().size();
  Digest d = digest(fresh);
  if (!d.panel.empty()) s.panel = d.panel;
  {
    std::lock_guard g(s.log_mu);
    for (const auto& r : fresh) {
      s.log.push_back({s.log.size() + 1, "trace", r.to_json()});
      if (r.task == "execute_expression" && r.outcome == "advance" && r.detail.contains("emission")) {
        s.log.push_back({s.log.size() + 1, "emotion", r.detail.at("emission")});
      }
    }
  }
  s.log_cv.notify_all();

  Json out{{"session_id", s.session_id}, {"time", rt.now()},       {"emotions", d.emotions},
           {"messages", d.messages},     {"trace", d.trace}};
  if (d.diagnostics) out["diagnostics"] = *d.diagnostics;
  out["learned"] = d.saved.has_value();
  if (d.saved) out["saved"] = *d.saved;
  out["alerted"] = d.alerted;
  if (d.practice) out["practice"] = *d.practice;
  return out;
}

Json SessionManager::create(const std::string& catalog_id) {
  if (!catalogs_.count(catalog_id)) throw authoring::UnknownCatalog("no catalog '" + catalog_id + "'");
  expire();
  auto s = std::make_shared<Session>();
  s->session_id = new_id();
  s->catalog_id = catalog_id;
  s->created_at = s->last_activity = now();
  runtime::AgentConfig config;
  config.auto_practice = options_.auto_practice;
  s->agent = std::make_unique<runtime::AgentInstance>(resources_, config);
  runtime::RuntimeOptions ro;
  ro.seed = options_.seed;
  ro.max_steps = std::numeric_limits<std::size_t>::max();
  s->runtime = std::make_unique<runtime::Runtime>(*s->agent, ro);
  s->hints = std::make_unique<teach::HintService>(resources_->points);

  std::lock_guard req(s->request_lock);
  Json out = run(*s, {SimEvent::parse("E1")});
  out["catalog_id"] = catalog_id;
  out["agent"] = {{"agent_id", s->agent->agent_id()}, {"role", s->agent->role()}};
  {
    std::unique_lock lk(mu_);
    sessions_.emplace(s->session_id, s);
  }
  return out;
}

Json SessionManager::submit_map(const std::string& session_id, const Json& map) {
  auto s = find(session_id);
  std::lock_guard req(s->request_lock);
  s->last_activity = now();
  s->hints->activity();
  // Parse first: a document that is not a map is a client error, not a
  // teaching mistake.
  const auto parsed = teach::concept_map_from_json(map);
  const auto diagnostics = teach::check_syntax(parsed, resources_->vocabulary);

  std::vector<SimEvent> events;
  const auto waiting = s->runtime->waiting("teachability");
  if (std::find(waiting.begin(), waiting.end(), "learn_from_user:S_1") != waiting.end()) {
    events.push_back(SimEvent::parse("E2:agree"));
  }
  events.push_back(SimEvent::parse(teach::accepted(diagnostics) ? "E4:clean" : "E4:error",
                                   Json{{"map", teach::to_json(parsed)}}));
  Json out = run(*s, std::move(events));
  Json ds = Json::array();
  for (const auto& d : diagnostics) ds.push_back(teach::to_json(d));
  out["diagnostics"] = std::move(ds);
  return out;
}

Json SessionManager::request_practice(const std::string& session_id, const std::string& goal) {
  auto s = find(session_id);
  std::lock_guard req(s->request_lock);
  s->last_activity = now();
  s->hints->activity();
  return run(*s, {SimEvent::parse("E3:start", Json{{"goal", goal}})});
}

Json SessionManager::select_path(const std::string& session_id, const std::vector<std::string>& goals) {
  auto s = find(session_id);
  std::lock_guard req(s->request_lock);
  s->last_activity = now();
  const auto& cat = catalogs_.at(s->catalog_id);
  auto path = authoring::assemble_path(cat, goals);
  const auto net = authoring::compile_path(cat, path);
  s->path = path;
  return Json{{"session_id", s->session_id}, {"path", path.goals}, {"net", goalnet::to_json(net)}};
}

Json SessionManager::state(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard req(s->request_lock);
  const double stalled = std::chrono::duration<double>(now() - s->last_activity).count();
  Json out = s->agent->state_json(s->runtime->now());
  out["session_id"] = s->session_id;
  out["catalog_id"] = s->catalog_id;
  out["panel"] = s->panel;
  out["waiting"] = s->runtime->waiting("teachability");
  out["path"] = s->path ? Json(s->path->goals) : Json(nullptr);
  out["stalled_for"] = stalled;
  {
    std::lock_guard g(s->log_mu);
    out["last_event_id"] = s->log.size();
  }
  // A hint on the first point of the panel in view the agent has not learned;
  // before any panel is shown, the one the agent would show.
  std::string panel = s->panel;
  if (panel.empty()) {
    const auto pick = teach::select_panel(s->agent->kb, resources_->panels);
    if (const auto* p = std::get_if<teach::TeachingPanel>(&pick)) panel = p->panel_id;
  }
  for (const auto& p : resources_->panels) {
    if (p.panel_id != panel) continue;
    for (int point : p.covered_points) {
      if (s->agent->kb.learned_points.count(point)) continue;
      if (auto h = s->hints->on_stall(point, stalled)) out["hint"] = teach::to_json(*h);
      break;
    }
  }
  return out;
}

std::vector<PushEvent> SessionManager::events(const std::string& session_id, std::uint64_t after,
                                              std::chrono::milliseconds wait) {
  std::shared_ptr<Session> s;
  {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw UnknownSession("no session '" + session_id + "'");
    s = it->second;
  }
  std::unique_lock g(s->log_mu);
  s->log_cv.wait_for(g, wait, [&] { return s->closed || s->log.size() > after; });
  std::vector<PushEvent> out;
  for (std::size_t i = after; i < s->log.size(); ++i) out.push_back(s->log[i]);
  return out;
}

}  // namespace ata::session
