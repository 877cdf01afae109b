#pragma once

#include <optional>

#include "ata/affect/occ.hpp"
#include "ata/fcm/fcm.hpp"

namespace ata::fcm {

class MissingAntecedent : public FcmError {
 public:
  using FcmError::FcmError;
};

/// Whether the emotion has its own intensity formula; the rest fall back to
/// |desirability|.
bool has_formula(affect::EmotionType e);

/// Raw intensity:
///   joy, hope             1.7 sqrt(expectation) - 0.7 desirability
///   distress, fear        2 expectation^2 - desirability
///   disappointment        antecedent hope * desirability
///   relief                antecedent fear * desirability
///   others                |desirability|
double intensity(affect::EmotionType e, const affect::AppraisalVariables& vars,
                 std::optional<double> antecedent = std::nullopt);

/// Same formula expressed as a map: expectation and desirability inputs hold
/// themselves, an internal concept raises expectation to 0.5 or 2, and the
/// emotion concept combines the two. Two steps from
/// [expectation, desirability, 0, 0] put the raw intensity in the emotion
/// concept. Only defined for joy, hope, distress and fear.
FcmModel build_intensity_model(affect::EmotionType e);
FcmState intensity_initial_state(const affect::AppraisalVariables& vars);

}  // namespace ata::fcm
