#pragma once

#include "ata/fcm/fcm.hpp"

namespace ata::fcm {

struct DilongParams {
  double v_giantdino = 10.0;
  double v_dilong_max = 8.0;
  double d_max = 80.0;
  double c4_max = 3.0;
  double initial_distance_ratio = 0.9;

  void check() const;
};

/// Magnitudes of the five causal edges. Signs follow the published edge
/// list; the values come from tools/calibrate_dilong (see data/fcm).
struct DilongWeights {
  double distance_desirability = -1.25;  // C1 -> C2
  double distance_likelihood = -1.0;     // C1 -> C3
  double desirability_fear = -1.25;      // C2 -> C4
  double likelihood_fear = 3.4;          // C3 -> C4
  double fear_action = 1.0;              // C4 -> C5
};

/// C1 distance, C2 desirability, C3 likelihood, C4 fear, C5 action.
/// C5 -> C1 carries d_max so that f_C1 = C1' / d_max turns the action
/// concept back into a normalised distance.
FcmModel build_dilong_model(const DilongParams& p, const DilongWeights& w = {});

/// [d, 0, 0, 0, d]: the action concept starts at the observed distance,
/// the only value it can carry into C1 on the first step.
FcmState dilong_initial_state(const DilongParams& p);

/// Absorbed when the distance concept reaches 0.
TerminationPolicy dilong_policy();

/// Rewrites the pursuer speed from `iteration` on, for speed changes made
/// while the simulation runs.
StepHook giantdino_speed_hook(std::size_t from_iteration, double v_giantdino);

}  // namespace ata::fcm
