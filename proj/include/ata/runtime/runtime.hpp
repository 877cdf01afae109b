#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ata/goalnet/executor.hpp"
#include "ata/runtime/agent.hpp"

namespace ata::runtime {

struct ScriptEntry {
  double delay = 0.0;  // after the previous entry
  SimEvent event;
};

struct ScenarioScript {
  std::string name;
  std::vector<ScriptEntry> events;
  goalnet::Blackboard initial;  // routine blackboard
  std::filesystem::path resources;  // data root; resolved against the file's directory
  std::uint64_t seed = 0;
  bool auto_practice = false;
  std::set<std::string> failing_actions;
  std::size_t max_steps = 2000;

  Json to_json() const;
  /// Throws DocumentError on a malformed script, including negative delays.
  static ScenarioScript from_json(const Json& j, const std::filesystem::path& base_dir = {});
  static ScenarioScript load(const std::filesystem::path& path);
};

enum class Mode { cooperative, threaded };

struct RuntimeOptions {
  Mode mode = Mode::cooperative;
  double ticks_per_second = 10.0;
  std::size_t max_steps = 2000;
  /// Virtual seconds a sub-net may wait on the student before giving up.
  double park_timeout = 180.0;
  std::uint64_t seed = 0;
};

/// Drives one agent: the routine, teachability and affect threads, the event
/// bus between them and the virtual clock. Turns are granted one at a time in
/// (virtual time, routine < teachability < affect) order, so the threaded
/// mode produces the same trace as the cooperative one.
class Runtime {
 public:
  Runtime(AgentInstance& agent, RuntimeOptions options = {}, goalnet::Blackboard initial = {});
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Queues an event for delivery at its timestamp (not before now).
  void schedule(SimEvent event);
  /// Runs until nothing more happens without a new event. Waiting sub-nets
  /// stay parked.
  void run_until_idle();
  /// Lets waiting sub-nets time out, then lets the routine finish.
  void finish();

  double now() const { return seconds(now_); }
  double tick() const { return seconds(1); }
  const std::vector<goalnet::TraceRecord>& trace() const { return trace_; }
  bool step_limited() const { return step_limited_; }
  bool completed() const;
  /// Errors raised by nets or tasks; recorded, not fatal.
  const std::vector<std::string>& errors() const { return errors_; }
  AgentInstance& agent() { return agent_; }
  const goalnet::ExecutionContext& routine_context() const;
  /// "net:state" of each sub-net on `lane` parked waiting for input.
  std::vector<std::string> waiting(std::string_view lane) const;

 private:
  struct Lane;
  struct Pending {
    std::int64_t time;  // ticks
    std::size_t seq;
    SimEvent event;
  };

  void loop(bool honour_timeouts);
  void deliver(SimEvent event);
  void turn(Lane& lane, bool honour_timeouts);
  void attach_branches();
  void emit(Lane& lane, goalnet::TraceRecord rec);
  void on_lane(Lane& lane, const std::function<void()>& work);
  void collect_posted(std::int64_t at);
  Lane& lane(std::string_view name);

  AgentInstance& agent_;
  RuntimeOptions options_;
  goalnet::Executor executor_;
  double seconds(std::int64_t ticks) const { return static_cast<double>(ticks) / options_.ticks_per_second; }
  std::int64_t ticks(double seconds) const;

  std::int64_t now_ = 0;  // ticks
  std::deque<Pending> events_;
  std::size_t event_seq_ = 0;
  std::vector<std::unique_ptr<Lane>> lanes_;
  bool attached_ = false;
  bool quiescent_sent_ = false;
  bool step_limited_ = false;
  std::size_t steps_ = 0;
  std::vector<goalnet::TraceRecord> trace_;
  std::vector<std::string> errors_;
};

struct RunResult {
  std::vector<goalnet::TraceRecord> trace;
  bool completed = false;
  bool step_limited = false;
  std::vector<std::string> errors;
  Json final_state;
};

/// Feeds the script's events on the virtual clock and runs the agent until
/// the routine finishes or the step limit is hit.
RunResult run_scenario(const ScenarioScript& script, AgentInstance& agent, Mode mode = Mode::cooperative);
/// Loads resources named by the script and builds the agent itself.
RunResult run_scenario(const ScenarioScript& script, Mode mode = Mode::cooperative);

}  // namespace ata::runtime
