#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ata::affect {

enum class EmotionType {
  joy,
  distress,
  happy_for,
  pity,
  gloating,
  resentment,
  hope,
  fear,
  satisfaction,
  disappointment,
  fears_confirmed,
  relief,
};

inline constexpr std::array<EmotionType, 12> kAllEmotions{
    EmotionType::joy,          EmotionType::distress,       EmotionType::happy_for,
    EmotionType::pity,         EmotionType::gloating,       EmotionType::resentment,
    EmotionType::hope,         EmotionType::fear,           EmotionType::satisfaction,
    EmotionType::disappointment, EmotionType::fears_confirmed, EmotionType::relief,
};

std::string_view to_string(EmotionType e);
EmotionType emotion_from_string(std::string_view name);

/// Upper bound of the raw intensity formula; raw / max lands in [0, 1].
double intensity_max(EmotionType e);

enum class Will { good_will, ill_will };

std::string_view to_string(Will w);
Will will_from_string(std::string_view name);

class AffectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InvalidAppraisal : public AffectError {
 public:
  using AffectError::AffectError;
};
class UnknownPair : public AffectError {
 public:
  using AffectError::AffectError;
};
class NoPendingProspect : public AffectError {
 public:
  using AffectError::AffectError;
};

struct AppraisalInput {
  std::string event_content;
  std::string event_endurer;
  std::string emotion_holder;
  std::string holder_goal;
  double desirability = 0.0;  // sign picks the branch, magnitude feeds intensity
  std::optional<Will> will;   // required when endurer != holder
  bool prospect_relevant = false;
  double expectation = 0.0;

  bool self_endured() const { return event_endurer == emotion_holder; }
  /// Throws InvalidAppraisal when a field is out of range or will is missing.
  void check() const;
};

struct AppraisalVariables {
  double expectation = 0.0;
  double desirability = 0.0;
  double effort = 0.0;       // carried, unused by any formula
  double realization = 0.0;  // carried, unused by any formula

  void check() const;
};

struct DecayConfig {
  double b = std::log(2.0) / 60.0;  // half-life of one minute
  double epsilon = 0.01;
  std::map<EmotionType, double> per_type;

  double rate(EmotionType e) const {
    auto it = per_type.find(e);
    return it == per_type.end() ? b : it->second;
  }
};

struct EmotionEpisode {
  EmotionType emotion = EmotionType::joy;
  double intensity = 0.0;      // normalised, at born_at
  double raw_intensity = 0.0;
  std::string cause;
  std::string target;
  double born_at = 0.0;
  double decay_rate_b = std::log(2.0) / 60.0;

  /// Normalised intensity after decaying to `now`.
  double intensity_at(double now) const;
  bool expired_at(double now, double epsilon) const { return intensity_at(now) < epsilon; }
};

/// Builds an episode whose intensity is clamp(raw / intensity_max, 0, 1).
EmotionEpisode make_episode(EmotionType emotion, double raw, std::string cause, std::string target,
                            double born_at, double b);

/// OCC decision procedure, first phase. Pure.
EmotionType appraise_type(const AppraisalInput& input);

/// Second phase: the emotion a confirmed or disconfirmed hope/fear turns into.
EmotionType resolution_type(EmotionType antecedent, bool confirmed);

class ProspectRegistry {
 public:
  using Key = std::pair<std::string, std::string>;  // (holder, event_content)

  /// Records a pending hope/fear. A second prospect under the same key
  /// refreshes the pending one and returns false.
  bool add(const Key& key, EmotionEpisode episode);

  struct Resolution {
    EmotionType emotion;
    EmotionEpisode antecedent;
  };
  Resolution resolve(const Key& key, bool confirmed);

  const EmotionEpisode* find(const Key& key) const;
  bool pending(const Key& key) const { return find(key) != nullptr; }
  std::size_t pending_count() const { return pending_.size(); }
  std::size_t registered_count() const { return registered_; }
  std::size_t resolved_count() const { return resolved_; }
  const std::map<Key, EmotionEpisode>& entries() const { return pending_; }

 private:
  std::map<Key, EmotionEpisode> pending_;
  std::size_t registered_ = 0;
  std::size_t resolved_ = 0;
};

/// Appraises `input`; hope and fear are registered as pending prospects with
/// `episode` (when given) as the stored antecedent.
EmotionType appraise(const AppraisalInput& input, ProspectRegistry& registry,
                     const std::optional<EmotionEpisode>& episode = std::nullopt);

inline ProspectRegistry::Resolution resolve_prospect(ProspectRegistry& registry,
                                                    const ProspectRegistry::Key& key, bool confirmed) {
  return registry.resolve(key, confirmed);
}

/// raw_intensity * e^(-b * elapsed).
double decay_intensity(const EmotionEpisode& episode, double elapsed);

}  // namespace ata::affect
