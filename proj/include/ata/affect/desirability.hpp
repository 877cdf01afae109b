#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ata/affect/occ.hpp"
#include "ata/common/io.hpp"

namespace ata::affect {

/// How one event content bears on the endurer's goal.
struct DesirabilityEntry {
  std::string goal;
  int sign = 1;  // +1 consistent with the goal, -1 inconsistent
  double magnitude = 1.0;
  bool prospect_relevant = false;
  /// "agent" or "student"; the agent is the emotion holder.
  std::string endurer = "agent";
  std::optional<Will> will;
  double expectation = 0.5;
  /// Set on events that settle a pending prospect, naming its event content.
  std::optional<std::string> resolves;
  bool confirmed = false;
};

class DesirabilityTable {
 public:
  void add(std::string event_content, DesirabilityEntry entry);
  const DesirabilityEntry* find(std::string_view event_content) const;
  const DesirabilityEntry& at(std::string_view event_content) const;
  const std::map<std::string, DesirabilityEntry, std::less<>>& entries() const { return entries_; }

  /// +magnitude when `event` is consistent with `goal`, -magnitude otherwise.
  /// Throws UnknownPair when the table does not relate the two.
  double judge(std::string_view event, std::string_view goal, double magnitude) const;

  /// Fills an appraisal input for the agent `holder` facing `event_content`.
  AppraisalInput appraisal_input(std::string_view event_content, const std::string& holder,
                                 const std::string& student) const;

  static DesirabilityTable from_json(const Json& doc);
  Json to_json() const;
  static DesirabilityTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, DesirabilityEntry, std::less<>> entries_;
};

/// Free-function form over a table.
inline double judge_desirability(const DesirabilityTable& table, std::string_view event,
                                 std::string_view goal, double magnitude) {
  return table.judge(event, goal, magnitude);
}

}  // namespace ata::affect
