// Python bindings. Documents cross the boundary as plain dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ata/affect/occ.hpp"
#include "ata/authoring/catalog.hpp"
#include "ata/fcm/dilong.hpp"
#include "ata/fcm/intensity.hpp"
#include "ata/goalnet/goal_net.hpp"
#include "ata/runtime/runtime.hpp"
#include "ata/session/session.hpp"
#include "ata/teach/knowledge.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace ata;

namespace {

#ifdef ATA_DATA_DIR
const fs::path kData = ATA_DATA_DIR;
#else
const fs::path kData = "data";
#endif

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict trajectory(const fcm::FcmModel& m, const fcm::Trajectory& t) {
  py::list concepts;
  for (const auto& c : m.concepts) concepts.append(c.id);
  py::list states;
  for (const auto& s : t.states) states.append(py::cast(s.vector));
  py::dict out;
  out["concepts"] = concepts;
  out["states"] = states;
  out["outcome"] = std::string(fcm::to_string(t.outcome));
  out["iterations"] = t.iterations();
  return out;
}

py::dict run(const fs::path& scenario, bool threaded, std::optional<std::uint64_t> seed) {
  auto script = runtime::ScenarioScript::load(scenario);
  if (seed) script.seed = *seed;
  runtime::RunResult r;
  {
    py::gil_scoped_release release;
    r = runtime::run_scenario(script, threaded ? runtime::Mode::threaded : runtime::Mode::cooperative);
  }
  py::list records;
  for (const auto& rec : r.trace) records.append(to_py(rec.to_json()));
  py::dict out;
  out["trace"] = records;
  out["completed"] = r.completed;
  out["errors"] = r.errors;
  out["final_state"] = to_py(r.final_state);
  return out;
}

std::string appraise(const std::string& event, double desirability, const std::string& holder,
                     const std::string& endurer, std::optional<std::string> will, bool prospect,
                     double expectation) {
  affect::AppraisalInput in;
  in.event_content = event;
  in.emotion_holder = holder;
  in.event_endurer = endurer.empty() ? holder : endurer;
  in.holder_goal = "goal";
  in.desirability = desirability;
  if (will) in.will = affect::will_from_string(*will);
  in.prospect_relevant = prospect;
  in.expectation = expectation;
  in.check();
  return std::string(affect::to_string(affect::appraise_type(in)));
}

py::object plan(const py::dict& kb_doc, const std::string& goal) {
  const auto kb = teach::KnowledgeBase::from_json(from_py(kb_doc));
  const auto r = teach::forward_chain(kb, goal);
  if (const auto* p = std::get_if<teach::ActionPlan>(&r)) return to_py(teach::to_json(*p));
  return py::none();
}

/// Rules taught by a concept map, added to the built-in knowledge.
py::object teach_map(const py::dict& map, const fs::path& data) {
  const auto vocab = teach::Vocabulary::load(data / "vs" / "vocabulary.json");
  auto kb = teach::load_builtins(data / "vs" / "builtins.json");
  kb.add_rules(teach::compile_map(teach::concept_map_from_json(from_py(map)), vocab));
  return to_py(kb.to_json());
}

py::list check_map(const py::dict& map, const fs::path& data) {
  const auto vocab = teach::Vocabulary::load(data / "vs" / "vocabulary.json");
  py::list out;
  for (const auto& d : teach::check_syntax(teach::concept_map_from_json(from_py(map)), vocab)) out.append(to_py(teach::to_json(d)));
  return out;
}

std::vector<std::string> validate_goalnets(const std::string& text) { return goalnet::load_goalnet_bundle(text).ids(); }

}  // namespace

PYBIND11_MODULE(ata, m) {
  m.doc() = "Affective teachable agent engine";
  m.attr("DATA_DIR") = kData.string();

  py::register_exception<DocumentError>(m, "DocumentError", PyExc_ValueError);
  py::register_exception<goalnet::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<affect::AffectError>(m, "AffectError", PyExc_ValueError);
  py::register_exception<teach::TeachError>(m, "TeachError", PyExc_ValueError);
  py::register_exception<fcm::FcmError>(m, "FcmError", PyExc_ValueError);
  py::register_exception<authoring::CatalogError>(m, "CatalogError", PyExc_ValueError);
  py::register_exception<authoring::PrerequisiteViolation>(m, "PrerequisiteViolation", PyExc_ValueError);
  py::register_exception<authoring::DuplicateSelection>(m, "DuplicateSelection", PyExc_ValueError);
  py::register_exception<session::UnknownSession>(m, "UnknownSession", PyExc_KeyError);
  py::register_exception<session::SessionExpired>(m, "SessionExpired", PyExc_KeyError);

  m.def("run_scenario", &run, py::arg("scenario"), py::arg("threaded") = false, py::arg("seed") = py::none(),
        "Replay a scenario script; returns the trace records, completion flag, errors and final agent state.");

  m.def(
      "simulate_fcm", [](const fs::path& path) {
        const auto s = fcm::load_scenario(path);
        return trajectory(s.model, s.run());
      },
      py::arg("model"));

  m.def(
      "simulate_dilong",
      [](double v_giantdino, double v_dilong_max, double d_max, double initial_distance_ratio) {
        fcm::DilongParams p;
        p.v_giantdino = v_giantdino;
        p.v_dilong_max = v_dilong_max;
        p.d_max = d_max;
        p.initial_distance_ratio = initial_distance_ratio;
        p.check();
        const auto model = fcm::build_dilong_model(p);
        return trajectory(model, fcm::simulate(model, fcm::dilong_initial_state(p), fcm::dilong_policy()));
      },
      py::arg("v_giantdino") = 10.0, py::arg("v_dilong_max") = 8.0, py::arg("d_max") = 80.0,
      py::arg("initial_distance_ratio") = 0.9);

  m.def("appraise", &appraise, py::arg("event"), py::arg("desirability"), py::arg("holder") = "agent",
        py::arg("endurer") = "", py::arg("will") = py::none(), py::arg("prospect") = false,
        py::arg("expectation") = 0.0, "Emotion type for one appraisal.");

  m.def(
      "intensity",
      [](const std::string& emotion, double expectation, double desirability) {
        affect::AppraisalVariables v{.expectation = expectation, .desirability = desirability};
        v.check();
        return fcm::intensity(affect::emotion_from_string(emotion), v);
      },
      py::arg("emotion"), py::arg("expectation"), py::arg("desirability"));

  m.def("forward_chain", &plan, py::arg("kb"), py::arg("goal"), "Action plan for the goal, or None.");
  m.def("teach_map", &teach_map, py::arg("map"), py::arg("data") = kData);
  m.def("check_map", &check_map, py::arg("map"), py::arg("data") = kData);
  m.def("validate_goalnets", &validate_goalnets, py::arg("text"), "Net ids of a valid bundle.");

  py::class_<session::SessionManager>(m, "Sessions")
      .def(py::init([](const fs::path& data, std::optional<std::uint64_t> seed) {
             session::SessionOptions o;
             o.data_root = data;
             if (seed) o.seed = *seed;
             return std::make_unique<session::SessionManager>(o);
           }),
           py::arg("data") = kData, py::arg("seed") = py::none())
      .def("catalogs", [](const session::SessionManager& s) { return to_py(s.catalogs()); })
      .def(
          "create", [](session::SessionManager& s, const std::string& c) { return to_py(s.create(c)); },
          py::arg("catalog_id") = "vs_transport")
      .def("submit_map",
           [](session::SessionManager& s, const std::string& id, const py::dict& map) { return to_py(s.submit_map(id, from_py(map))); })
      .def(
          "practice",
          [](session::SessionManager& s, const std::string& id, const std::string& goal) {
            return to_py(s.request_practice(id, goal));
          },
          py::arg("session_id"), py::arg("goal") = "entering_root")
      .def("select_path",
           [](session::SessionManager& s, const std::string& id, const std::vector<std::string>& goals) {
             return to_py(s.select_path(id, goals));
           })
      .def("state", [](session::SessionManager& s, const std::string& id) { return to_py(s.state(id)); })
      .def(
          "events",
          [](session::SessionManager& s, const std::string& id, std::uint64_t after) {
            py::list out;
            for (const auto& e : s.events(id, after)) {
              py::dict d;
              d["id"] = e.id;
              d["kind"] = e.kind;
              d["data"] = to_py(e.data);
              out.append(d);
            }
            return out;
          },
          py::arg("session_id"), py::arg("after") = 0)
      .def("__len__", &session::SessionManager::size);
}
