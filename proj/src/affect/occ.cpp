#include "ata/affect/occ.hpp"

#include <algorithm>

namespace ata::affect {

namespace {

constexpr std::array<std::string_view, 12> kNames{
    "joy",          "distress",       "happy_for",      "pity",
    "gloating",     "resentment",     "hope",           "fear",
    "satisfaction", "disappointment", "fears_confirmed", "relief",
};

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

}  // namespace

std::string_view to_string(EmotionType e) { return kNames[static_cast<std::size_t>(e)]; }

EmotionType emotion_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAllEmotions[i];
  }
  throw AffectError("unknown emotion '" + std::string(name) + "'");
}

double intensity_max(EmotionType e) {
  switch (e) {
    case EmotionType::joy:
    case EmotionType::hope:
      return 2.4;  // 1.7 * sqrt(1) - 0.7 * (-1)
    case EmotionType::fear:
    case EmotionType::distress:
      return 3.0;  // 2 * 1^2 - (-1)
    default:
      return 1.0;
  }
}

std::string_view to_string(Will w) { return w == Will::good_will ? "good_will" : "ill_will"; }

Will will_from_string(std::string_view name) {
  if (name == "good_will") return Will::good_will;
  if (name == "ill_will") return Will::ill_will;
  throw AffectError("unknown will '" + std::string(name) + "'");
}

void AppraisalInput::check() const {
  if (!in_range(desirability, -1.0, 1.0)) throw InvalidAppraisal("desirability outside [-1, 1]");
  if (!in_range(expectation, 0.0, 1.0)) throw InvalidAppraisal("expectation outside [0, 1]");
  if (!self_endured() && !will) {
    throw InvalidAppraisal("will of '" + emotion_holder + "' towards '" + event_endurer + "' is required");
  }
}

void AppraisalVariables::check() const {
  if (!in_range(expectation, 0.0, 1.0)) throw InvalidAppraisal("expectation outside [0, 1]");
  if (!in_range(desirability, -1.0, 1.0)) throw InvalidAppraisal("desirability outside [-1, 1]");
  if (!in_range(effort, 0.0, 1.0)) throw InvalidAppraisal("effort outside [0, 1]");
  if (!in_range(realization, 0.0, 1.0)) throw InvalidAppraisal("realization outside [0, 1]");
}

double decay_intensity(const EmotionEpisode& episode, double elapsed) {
  return episode.raw_intensity * std::exp(-episode.decay_rate_b * std::max(0.0, elapsed));
}

double EmotionEpisode::intensity_at(double now) const {
  const double raw = decay_intensity(*this, now - born_at);
  return std::clamp(raw / intensity_max(emotion), 0.0, 1.0);
}

EmotionEpisode make_episode(EmotionType emotion, double raw, std::string cause, std::string target,
                            double born_at, double b) {
  EmotionEpisode e;
  e.emotion = emotion;
  e.raw_intensity = raw;
  e.intensity = std::clamp(raw / intensity_max(emotion), 0.0, 1.0);
  e.cause = std::move(cause);
  e.target = std::move(target);
  e.born_at = born_at;
  e.decay_rate_b = b;
  return e;
}

EmotionType appraise_type(const AppraisalInput& in) {
  in.check();
  // Zero desirability falls on the desirable side of each binary split.
  const bool desirable = in.desirability >= 0.0;
  if (!in.self_endured()) {
    if (*in.will == Will::good_will) return desirable ? EmotionType::happy_for : EmotionType::pity;
    return desirable ? EmotionType::resentment : EmotionType::gloating;
  }
  if (!in.prospect_relevant) return desirable ? EmotionType::joy : EmotionType::distress;
  return desirable ? EmotionType::hope : EmotionType::fear;
}

EmotionType resolution_type(EmotionType antecedent, bool confirmed) {
  switch (antecedent) {
    case EmotionType::hope:
      return confirmed ? EmotionType::satisfaction : EmotionType::disappointment;
    case EmotionType::fear:
      return confirmed ? EmotionType::fears_confirmed : EmotionType::relief;
    default:
      throw AffectError("only hope and fear can be confirmed, not " + std::string(to_string(antecedent)));
  }
}

bool ProspectRegistry::add(const Key& key, EmotionEpisode episode) {
  if (episode.emotion != EmotionType::hope && episode.emotion != EmotionType::fear) {
    throw AffectError("prospects hold hope or fear, not " + std::string(to_string(episode.emotion)));
  }
  auto [it, inserted] = pending_.insert_or_assign(key, std::move(episode));
  if (inserted) ++registered_;
  return inserted;
}

ProspectRegistry::Resolution ProspectRegistry::resolve(const Key& key, bool confirmed) {
  auto it = pending_.find(key);
  if (it == pending_.end()) {
    throw NoPendingProspect("no pending prospect for (" + key.first + ", " + key.second + ")");
  }
  Resolution r{resolution_type(it->second.emotion, confirmed), std::move(it->second)};
  pending_.erase(it);
  ++resolved_;
  return r;
}

const EmotionEpisode* ProspectRegistry::find(const Key& key) const {
  auto it = pending_.find(key);
  return it == pending_.end() ? nullptr : &it->second;
}

EmotionType appraise(const AppraisalInput& input, ProspectRegistry& registry,
                     const std::optional<EmotionEpisode>& episode) {
  const EmotionType e = appraise_type(input);
  if (e == EmotionType::hope || e == EmotionType::fear) {
    EmotionEpisode stored = episode.value_or(
        make_episode(e, std::abs(input.desirability), input.event_content, input.event_endurer, 0.0, DecayConfig{}.b));
    stored.emotion = e;
    registry.add({input.emotion_holder, input.event_content}, std::move(stored));
  }
  return e;
}

}  // namespace ata::affect
