#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ata/authoring/catalog.hpp"
#include "ata/runtime/runtime.hpp"

namespace ata::session {

class UnknownSession : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SessionExpired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct SessionOptions {
  std::filesystem::path data_root;
  std::chrono::seconds idle_timeout{30 * 60};
  /// Wall clock for expiry and the stall clock; tests inject their own.
  std::function<Clock::time_point()> clock;
  std::uint64_t seed = 0;
  /// Practice starts by itself once the panel in view is fully taught.
  bool auto_practice = true;
};

/// One entry of a session's push stream.
struct PushEvent {
  std::uint64_t id = 0;
  std::string kind;  // "trace" or "emotion"
  Json data;
};

/// Hands the lock out in arrival order, so requests on one session are
/// served first come, first served.
class FifoLock {
 public:
  void lock();
  void unlock();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_ = 0;
  std::uint64_t serving_ = 0;
};

struct Session {
  std::string session_id;
  std::string catalog_id;
  Clock::time_point created_at;
  Clock::time_point last_activity;
  std::unique_ptr<runtime::AgentInstance> agent;
  std::unique_ptr<runtime::Runtime> runtime;
  std::optional<authoring::LearningPath> path;
  std::unique_ptr<teach::HintService> hints;
  std::string panel;  // panel the agent last showed
  std::size_t seen = 0;  // trace records already pushed

  FifoLock request_lock;

  // Push log, readable without the request lock.
  mutable std::mutex log_mu;
  std::condition_variable log_cv;
  std::vector<PushEvent> log;
  bool closed = false;
};

/// Live teaching sessions over the shared agent resources. Each session owns
/// one agent on a virtual clock that advances only while the agent works, so
/// the same requests give the same responses.
class SessionManager {
 public:
  explicit SessionManager(SessionOptions options);
  ~SessionManager();

  /// Catalog documents, as loaded.
  Json catalogs() const;

  /// New session; the student's arrival (E1) is processed before returning.
  /// Throws UnknownCatalog.
  Json create(const std::string& catalog_id);
  Json submit_map(const std::string& session_id, const Json& map);
  Json request_practice(const std::string& session_id, const std::string& goal);
  /// Throws PrerequisiteViolation or DuplicateSelection.
  Json select_path(const std::string& session_id, const std::vector<std::string>& goals);
  Json state(const std::string& session_id);

  /// Push events with id > `after`, waiting up to `wait` for one to arrive.
  /// Returns empty on timeout or when the session is gone.
  std::vector<PushEvent> events(const std::string& session_id, std::uint64_t after,
                                std::chrono::milliseconds wait = std::chrono::milliseconds(0));

  /// Drops sessions idle past the timeout. Returns how many went.
  std::size_t expire();
  std::size_t size() const;
  const SessionOptions& options() const { return options_; }

 private:
  std::shared_ptr<Session> find(const std::string& session_id);
  Json run(Session& s, std::vector<runtime::SimEvent> events);
  std::string new_id();
  Clock::time_point now() const { return options_.clock(); }

  SessionOptions options_;
  std::shared_ptr<const runtime::AgentResources> resources_;
  std::map<std::string, authoring::GoalCatalog> catalogs_;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  std::uint64_t id_state_[2];
};

/// HTTP front end. Runs until stop() is called from another thread.
class Server {
 public:
  explicit Server(SessionManager& manager);
  ~Server();
  /// Binds and serves; returns false when the port cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves in the background; returns the port.
  int start(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ata::session
