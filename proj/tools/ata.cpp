// ata: run scenarios, simulate FCMs, validate documents, serve sessions.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "ata/affect/desirability.hpp"
#include "ata/authoring/catalog.hpp"
#include "ata/fcm/fcm.hpp"
#include "ata/goalnet/goal_net.hpp"
#include "ata/runtime/runtime.hpp"
#include "ata/session/session.hpp"
#include "ata/teach/knowledge.hpp"

namespace fs = std::filesystem;
using namespace ata;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

#ifdef ATA_DATA_DIR
const fs::path kDefaultData = ATA_DATA_DIR;
#else
const fs::path kDefaultData = "data";
#endif

/// Data root a document belongs to: the nearest ancestor holding vs/.
fs::path data_root_for(const fs::path& file) {
  for (fs::path p = fs::absolute(file).parent_path(); !p.empty(); p = p.parent_path()) {
    if (fs::exists(p / "vs" / "knowledge_points.json")) return p;
    if (p == p.root_path()) break;
  }
  return kDefaultData;
}

int cmd_run(const fs::path& scenario, const std::string& trace_out, std::optional<std::uint64_t> seed, bool threaded) {
  runtime::ScenarioScript script;
  try {
    script = runtime::ScenarioScript::load(scenario);
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kInvalid;
  }
  if (seed) script.seed = *seed;
  runtime::RunResult r;
  try {
    r = runtime::run_scenario(script, threaded ? runtime::Mode::threaded : runtime::Mode::cooperative);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRuntime;
  }
  const std::string text = goalnet::to_ndjson(r.trace);
  if (trace_out.empty() || trace_out == "-") {
    std::cout << text;
  } else {
    write_text_file(trace_out, text);
  }
  std::cerr << script.name << ": " << r.trace.size() << " records, "
            << (r.completed ? "completed" : r.step_limited ? "step limit reached" : "incomplete") << "\n";
  for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
  return r.errors.empty() ? kOk : kRuntime;
}

int cmd_fcm(const fs::path& model, const std::string& csv_out) {
  fcm::Scenario s;
  try {
    s = fcm::load_scenario(model);
    s.model.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return kInvalid;
  }
  try {
    const auto t = s.run();
    const std::string csv = fcm::trajectory_csv(s.model, t);
    if (csv_out.empty() || csv_out == "-") {
      std::cout << csv;
    } else {
      write_text_file(csv_out, csv);
    }
    std::cerr << fcm::to_string(t.outcome) << " after " << t.iterations() << " iterations\n";
  } catch (const std::exception& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

/// Checks one document, telling the kind from its "format" tag.
int cmd_validate(const fs::path& file, const fs::path& data_opt) {
  try {
    const Json doc = load_json_file(file);
    const std::string format = doc.is_object() ? doc.value("format", "") : "";
    const std::string kind = format.substr(0, format.find('/'));
    const fs::path data = data_opt.empty() ? data_root_for(file) : data_opt;
    if (kind == "goalnet" && !doc.contains("nets")) {
      // Branch targets resolve against the other nets next to the file.
      goalnet::NetLibrary lib;
      auto net = goalnet::load_goalnet(read_text_file(file));
      const std::string id = net.id;
      lib.add(std::move(net));
      for (const auto& entry : fs::directory_iterator(fs::absolute(file).parent_path())) {
        if (entry.path().extension() != ".json" || fs::equivalent(entry.path(), file)) continue;
        try {
          auto other = goalnet::load_goalnet(read_text_file(entry.path()));
          if (other.id != id) lib.add(std::move(other));
        } catch (const std::exception&) {
          // not a net, or a broken one: not ours to report
        }
      }
      lib.validate();
      std::cout << "goalnet ok: " << id << "\n";
    } else if (kind == "goalnet" || doc.contains("nets")) {
      const auto lib = goalnet::load_goalnet_bundle(read_text_file(file));
      std::cout << "goalnet ok: " << lib.ids().size() << " net(s)\n";
    } else if (kind == "scenario") {
      const auto s = runtime::ScenarioScript::load(file);
      const auto table = affect::DesirabilityTable::load(s.resources / "vs" / "desirability.json");
      for (const auto& entry : s.events) {
        if (!table.find(entry.event.content())) throw DocumentError("event '" + entry.event.content() + "' is not in the event table");
      }
      std::cout << "scenario ok: " << s.events.size() << " event(s)\n";
    } else if (kind == "catalog") {
      const auto points = teach::PointCatalog::load(data / "vs" / "knowledge_points.json");
      const auto library = authoring::TaskLibrary::load(data / "vs" / "task_library.json");
      const auto cat = authoring::load_catalog(doc, points, library);
      authoring::compile_library(cat);
      std::cout << "catalog ok: " << cat.goals.size() << " goal(s)\n";
    } else if (kind == "conceptmap") {
      const auto vocab = teach::Vocabulary::load(data / "vs" / "vocabulary.json");
      const auto ds = teach::check_syntax(teach::concept_map_from_json(doc), vocab);
      for (const auto& d : ds) std::cout << (d.warning ? "warning: " : "error: ") << d.where << ": " << d.message << "\n";
      if (!teach::accepted(ds)) return kInvalid;
      std::cout << "conceptmap ok\n";
    } else if (kind == "desirability") {
      const auto t = affect::DesirabilityTable::from_json(doc);
      std::cout << "desirability ok\n";
    } else if (kind == "fcm") {
      fcm::scenario_from_json(doc).model.validate();
      std::cout << "fcm ok\n";
    } else {
      std::cerr << "unrecognised document format '" << format << "'\n";
      return kInvalid;
    }
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}

session::Server* g_server = nullptr;

int cmd_serve(int port, const std::string& host, const fs::path& data, int idle_minutes) {
  session::SessionOptions opts;
  opts.data_root = data;
  opts.idle_timeout = std::chrono::minutes(idle_minutes);
  std::unique_ptr<session::SessionManager> manager;
  try {
    manager = std::make_unique<session::SessionManager>(opts);
  } catch (const std::exception& e) {
    std::cerr << "cannot load data: " << e.what() << "\n";
    return kInvalid;
  }
  session::Server server(*manager);
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cerr << "serving on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affective teachable agent engine"};
  app.require_subcommand(1);

  fs::path scenario;
  std::string trace_out;
  std::uint64_t seed = 0;
  bool threaded = false;
  auto* run = app.add_subcommand("run", "Replay a scenario script and write its trace");
  run->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--trace", trace_out, "Trace output (ndjson); stdout when omitted");
  auto* seed_opt = run->add_option("--seed", seed, "Override the script's seed");
  run->add_flag("--threaded", threaded, "One OS thread per agent thread");

  fs::path model;
  std::string csv_out;
  auto* sim = app.add_subcommand("simulate-fcm", "Run an FCM scenario and write its trajectory");
  sim->add_option("--model", model, "FCM scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--csv", csv_out, "CSV output; stdout when omitted");

  fs::path doc;
  fs::path data;
  auto* val = app.add_subcommand("validate", "Check a goal net, scenario, catalog, concept map, table or FCM file");
  val->add_option("file", doc, "Document")->required()->check(CLI::ExistingFile);
  val->add_option("--data", data, "Data root for catalog and map checks");

  int port = 8080;
  std::string host = "127.0.0.1";
  fs::path serve_data = kDefaultData;
  int idle = 30;
  auto* serve = app.add_subcommand("serve", "Start the session service");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--data", serve_data, "Data root")->check(CLI::ExistingDirectory);
  serve->add_option("--idle-minutes", idle, "Session idle timeout")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  if (*run) return cmd_run(scenario, trace_out, *seed_opt ? std::optional(seed) : std::nullopt, threaded);
  if (*sim) return cmd_fcm(model, csv_out);
  if (*val) return cmd_validate(doc, data);
  if (*serve) return cmd_serve(port, host, serve_data, idle);
  return kInvalid;
}
