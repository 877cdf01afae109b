#include "ata/fcm/dilong.hpp"

namespace ata::fcm {

void DilongParams::check() const {
  if (v_giantdino <= 0 || v_dilong_max <= 0 || d_max <= 0 || c4_max <= 0 || initial_distance_ratio <= 0) {
    throw FcmError("Dilong parameters must be positive");
  }
  if (initial_distance_ratio > 1.0) throw FcmError("initial distance ratio exceeds 1");
}

FcmModel build_dilong_model(const DilongParams& p, const DilongWeights& w) {
  p.check();
  FcmModel m;
  m.name = "dilong";
  m.add_concept({"C1", "distance", Role::input, {0.0, 1.0}});
  m.add_concept({"C2", "desirability", Role::internal, {-1.0, 1.0}});
  m.add_concept({"C3", "likelihood", Role::internal, {0.0, 1.0}});
  m.add_concept({"C4", "fear", Role::emotion, {0.0, p.c4_max}});
  m.add_concept({"C5", "action", Role::action, {0.0, 1.0}});

  m.set_weight("C1", "C2", w.distance_desirability);
  m.set_weight("C1", "C3", w.distance_likelihood);
  m.set_weight("C2", "C4", w.desirability_fear);
  m.set_weight("C3", "C4", w.likelihood_fear);
  m.set_weight("C4", "C5", w.fear_action);
  m.set_weight("C5", "C1", p.d_max);

  m.activations["C1"] = {"distance_normalize", {{"scale", p.d_max}}, {}};
  m.activations["C3"] = {"likelihood_piecewise", {}, {}};
  m.activations["C5"] = {"pursuit",
                         {{"v_pursuer", p.v_giantdino},
                          {"v_max", p.v_dilong_max},
                          {"d_max", p.d_max},
                          {"emotion_max", p.c4_max}},
                         "C1"};
  m.validate();
  return m;
}

FcmState dilong_initial_state(const DilongParams& p) {
  const double d = p.initial_distance_ratio;
  return FcmState{{d, 0.0, 0.0, 0.0, d}, 0};
}

TerminationPolicy dilong_policy() {
  TerminationPolicy policy;
  policy.absorbing = Threshold{"C1", "le", 0.0};
  return policy;
}

StepHook giantdino_speed_hook(std::size_t from_iteration, double v_giantdino) {
  return [=](std::size_t iteration, FcmModel& m) {
    if (iteration >= from_iteration) m.activations.at("C5").params["v_pursuer"] = v_giantdino;
  };
}

}  // namespace ata::fcm
