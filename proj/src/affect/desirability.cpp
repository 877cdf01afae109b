#include "ata/affect/desirability.hpp"

namespace ata::affect {

void DesirabilityTable::add(std::string event_content, DesirabilityEntry entry) {
  if (entry.sign != 1 && entry.sign != -1) throw AffectError("sign of '" + event_content + "' must be +1 or -1");
  if (entry.magnitude < 0.0 || entry.magnitude > 1.0) {
    throw AffectError("magnitude of '" + event_content + "' outside [0, 1]");
  }
  if (entry.expectation < 0.0 || entry.expectation > 1.0) {
    throw AffectError("expectation of '" + event_content + "' outside [0, 1]");
  }
  if (entry.endurer != "agent" && !entry.will) {
    throw AffectError("'" + event_content + "' is endured by someone else and needs a will");
  }
  entries_[std::move(event_content)] = std::move(entry);
}

const DesirabilityEntry* DesirabilityTable::find(std::string_view event_content) const {
  auto it = entries_.find(event_content);
  return it == entries_.end() ? nullptr : &it->second;
}

const DesirabilityEntry& DesirabilityTable::at(std::string_view event_content) const {
  if (const auto* e = find(event_content)) return *e;
  throw UnknownPair("event '" + std::string(event_content) + "' is not in the desirability table");
}

double DesirabilityTable::judge(std::string_view event, std::string_view goal, double magnitude) const {
  const auto* e = find(event);
  if (e == nullptr || e->goal != goal) {
    throw UnknownPair("no desirability registered for (" + std::string(event) + ", " + std::string(goal) + ")");
  }
  if (magnitude == 0.0) return 0.0;
  return e->sign > 0 ? magnitude : -magnitude;
}

AppraisalInput DesirabilityTable::appraisal_input(std::string_view event_content, const std::string& holder,
                                                  const std::string& student) const {
  const DesirabilityEntry& e = at(event_content);
  AppraisalInput in;
  in.event_content = std::string(event_content);
  in.event_endurer = e.endurer == "agent" ? holder : student;
  in.emotion_holder = holder;
  in.holder_goal = e.goal;
  in.desirability = judge(event_content, e.goal, e.magnitude);
  in.will = e.will;
  in.prospect_relevant = e.prospect_relevant;
  in.expectation = e.expectation;
  return in;
}

DesirabilityTable DesirabilityTable::from_json(const Json& doc) {
  DesirabilityTable table;
  const Json& entries = doc.contains("entries") ? doc.at("entries") : doc;
  if (!entries.is_object()) throw AffectError("desirability table must map event contents to entries");
  for (const auto& [event, j] : entries.items()) {
    DesirabilityEntry e;
    try {
      e.goal = j.at("goal").get<std::string>();
      e.sign = j.value("sign", 1);
      e.magnitude = j.value("magnitude", 1.0);
      e.prospect_relevant = j.value("prospect_relevant", false);
      e.endurer = j.value("endurer", std::string("agent"));
      if (j.contains("will")) e.will = will_from_string(j.at("will").get<std::string>());
      e.expectation = j.value("expectation", 0.5);
      if (j.contains("resolves")) e.resolves = j.at("resolves").get<std::string>();
      e.confirmed = j.value("confirmed", false);
    } catch (const Json::exception& ex) {
      throw AffectError("desirability entry '" + event + "': " + ex.what());
    }
    table.add(event, std::move(e));
  }
  return table;
}

Json DesirabilityTable::to_json() const {
  Json entries = Json::object();
  for (const auto& [event, e] : entries_) {
    Json j{{"goal", e.goal},
           {"sign", e.sign},
           {"magnitude", e.magnitude},
           {"prospect_relevant", e.prospect_relevant},
           {"endurer", e.endurer},
           {"expectation", e.expectation}};
    if (e.will) j["will"] = to_string(*e.will);
    if (e.resolves) {
      j["resolves"] = *e.resolves;
      j["confirmed"] = e.confirmed;
    }
    entries[event] = std::move(j);
  }
  return Json{{"format", "desirability/1"}, {"entries", std::move(entries)}};
}

DesirabilityTable DesirabilityTable::load(const std::filesystem::path& path) {
  return from_json(load_json_file(path));
}

}  // namespace ata::affect
