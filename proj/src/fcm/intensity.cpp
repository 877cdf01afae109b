#include "ata/fcm/intensity.hpp"

#include <cmath>

namespace ata::fcm {

using affect::EmotionType;

bool has_formula(EmotionType e) {
  switch (e) {
    case EmotionType::joy:
    case EmotionType::hope:
    case EmotionType::distress:
    case EmotionType::fear:
    case EmotionType::disappointment:
    case EmotionType::relief:
      return true;
    default:
      return false;
  }
}

double intensity(EmotionType e, const affect::AppraisalVariables& vars, std::optional<double> antecedent) {
  vars.check();
  switch (e) {
    case EmotionType::joy:
    case EmotionType::hope:
      return 1.7 * std::sqrt(vars.expectation) - 0.7 * vars.desirability;
    case EmotionType::distress:
    case EmotionType::fear:
      return 2.0 * vars.expectation * vars.expectation - vars.desirability;
    case EmotionType::disappointment:
    case EmotionType::relief:
      if (!antecedent) {
        throw MissingAntecedent(std::string(affect::to_string(e)) + " needs the intensity of the prospect it settles");
      }
      return *antecedent * vars.desirability;
    default:
      return std::abs(vars.desirability);
  }
}

FcmModel build_intensity_model(EmotionType e) {
  double exponent = 0.0, w_expect = 0.0, w_desire = 0.0;
  switch (e) {
    case EmotionType::joy:
    case EmotionType::hope:
      exponent = 0.5, w_expect = 1.7, w_desire = -0.7;
      break;
    case EmotionType::distress:
    case EmotionType::fear:
      exponent = 2.0, w_expect = 2.0, w_desire = -1.0;
      break;
    default:
      throw FcmError("no intensity map for " + std::string(affect::to_string(e)));
  }
  FcmModel m;
  m.name = std::string(affect::to_string(e)) + "_intensity";
  m.add_concept({"expectation", "expectation", Role::input, {0.0, 1.0}});
  m.add_concept({"desirability", "desirability", Role::input, {-1.0, 1.0}});
  m.add_concept({"expectation_term", "expectation term", Role::internal, {0.0, 1.0}});
  m.add_concept({"emotion", std::string(affect::to_string(e)), Role::emotion, {-1.0, affect::intensity_max(e)}});
  m.set_weight("expectation", "expectation", 1.0);
  m.set_weight("desirability", "desirability", 1.0);
  m.set_weight("expectation", "expectation_term", 1.0);
  m.set_weight("expectation_term", "emotion", w_expect);
  m.set_weight("desirability", "emotion", w_desire);
  m.activations["expectation_term"] = {"power", {{"exponent", exponent}}, {}};
  m.validate();
  return m;
}

FcmState intensity_initial_state(const affect::AppraisalVariables& vars) {
  return FcmState{{vars.expectation, vars.desirability, 0.0, 0.0}, 0};
}

}  // namespace ata::fcm
