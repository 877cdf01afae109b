#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ata/common/io.hpp"

namespace ata::fcm {

class FcmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DimensionMismatch : public FcmError {
 public:
  using FcmError::FcmError;
};
class UnknownActivation : public FcmError {
 public:
  using FcmError::FcmError;
};
class CodomainMismatch : public FcmError {
 public:
  using FcmError::FcmError;
};
class NoSharedConcept : public FcmError {
 public:
  using FcmError::FcmError;
};

enum class Role { input, internal, emotion, action };

std::string_view to_string(Role r);
Role role_from_string(std::string_view name);

struct Codomain {
  double lo = -1.0;
  double hi = 1.0;

  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Codomain&, const Codomain&) = default;
};

struct Concept {
  std::string id;
  std::string name;
  Role role = Role::internal;
  Codomain codomain;

  friend bool operator==(const Concept&, const Concept&) = default;
};

/// Named builtin plus parameters. Kinds:
///   identity                      clamp(x)
///   distance_normalize {scale}    clamp(x / scale)
///   likelihood_piecewise          (1-|x|)^2 for x < 0, x otherwise
///   power {exponent}              clamp(x)^exponent, x clamped to [0, inf)
///   pursuit {v_pursuer, v_max, d_max, emotion_max}, source = distance concept
///       clamp(d - (v_pursuer - clamp(x / emotion_max, 0, 1) * v_max) / d_max)
///       where d is the freshly activated value of `source`.
struct Activation {
  std::string kind = "identity";
  std::map<std::string, double> params;
  std::string source;

  double param(const std::string& key) const;
  /// Coupled kinds read other concepts' fresh values and run last.
  bool coupled() const { return kind == "pursuit"; }
  friend bool operator==(const Activation&, const Activation&) = default;
};

class FcmModel {
 public:
  std::string name;
  std::vector<Concept> concepts;
  /// Row-major n x n; weights[i * n + j] is the influence of concept i on j.
  std::vector<double> weights;
  std::map<std::string, Activation> activations;

  std::size_t size() const { return concepts.size(); }
  double weight(std::size_t i, std::size_t j) const { return weights[i * size() + j]; }
  double& weight(std::size_t i, std::size_t j) { return weights[i * size() + j]; }
  std::size_t index_of(std::string_view concept_id) const;
  std::optional<std::size_t> find(std::string_view concept_id) const;
  const Activation& activation(std::size_t i) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  /// Adds a concept with a zero row and column.
  void add_concept(Concept c);
  void set_weight(std::string_view from, std::string_view to, double w);

  /// Square weights, known activation kinds with their parameters, coupled
  /// sources that exist.
  void validate() const;

  friend bool operator==(const FcmModel&, const FcmModel&) = default;
};

struct FcmState {
  std::vector<double> vector;
  std::size_t iteration = 0;
};

struct Threshold {
  std::string concept_id;
  std::string op = "le";  // "le" or "ge"
  double value = 0.0;
};

struct TerminationPolicy {
  double epsilon = 1e-6;
  std::size_t max_iterations = 1000;
  std::optional<Threshold> absorbing;
};

enum class Outcome { fixed_point, absorbed, max_iterations };

std::string_view to_string(Outcome o);

struct Trajectory {
  std::vector<FcmState> states;  // states[0] is the initial state
  Outcome outcome = Outcome::max_iterations;

  std::size_t iterations() const { return states.empty() ? 0 : states.back().iteration; }
  const FcmState& final_state() const { return states.back(); }
  std::vector<double> series(std::size_t concept_index) const;
};

/// raw = v . W, then each concept's activation (coupled kinds last).
FcmState fcm_step(const FcmState& state, const FcmModel& model);

/// Called before each step with the iteration about to be computed; may
/// adjust activation parameters of the working copy.
using StepHook = std::function<void(std::size_t iteration, FcmModel& working)>;

Trajectory simulate(const FcmModel& model, const FcmState& init, const TerminationPolicy& policy,
                    const StepHook& hook = {});

struct Composition {
  FcmModel model;
  std::vector<std::string> log;
};

/// Merges `b` into `a` along `shared` (a-concept, b-concept) pairs. a's
/// concepts keep their order and ids; b's remaining concepts follow, renamed
/// with a suffix on id clashes. Where both models weight the same merged
/// edge, or both define an activation, a wins and the override is logged.
Composition compose(const FcmModel& a, const FcmModel& b,
                    const std::vector<std::pair<std::string, std::string>>& shared);

// Structured-text scenario files --------------------------------------------

struct ParamOverride {
  std::size_t from_iteration = 0;
  std::string concept_id;
  std::string param;
  double value = 0.0;
};

struct Scenario {
  FcmModel model;
  FcmState init;
  TerminationPolicy policy;
  std::vector<ParamOverride> overrides;

  StepHook hook() const;
  Trajectory run() const { return simulate(model, init, policy, hook()); }
};

FcmModel model_from_json(const Json& j);
Json to_json(const FcmModel& m);
Scenario scenario_from_json(const Json& j);
Json to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// "iteration,<concept ids...>,outcome" header, one row per state.
std::string trajectory_csv(const FcmModel& model, const Trajectory& t);

}  // namespace ata::fcm
