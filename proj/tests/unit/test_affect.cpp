#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "ata/affect/desirability.hpp"
#include "ata/affect/occ.hpp"
#include "support.hpp"

using namespace ata;
using namespace ata::affect;

namespace {

AppraisalInput input(bool self, Will will, bool prospect, double desirability) {
  AppraisalInput in;
  in.event_content = "ev";
  in.emotion_holder = "agent";
  in.event_endurer = self ? "agent" : "student";
  in.desirability = desirability;
  if (!self) in.will = will;
  in.prospect_relevant = prospect;
  in.expectation = 0.5;
  return in;
}

}  // namespace

TEST_CASE("first-phase appraisal covers eight emotions exactly once") {
  // Decision table written out leaf by leaf.
  struct Row {
    bool self;
    Will will;
    bool prospect;
    double d;
    EmotionType want;
  };
  const Row rows[] = {
      {false, Will::good_will, false, 0.6, EmotionType::happy_for},
      {false, Will::good_will, false, -0.6, EmotionType::pity},
      {false, Will::ill_will, false, 0.6, EmotionType::resentment},
      {false, Will::ill_will, false, -0.6, EmotionType::gloating},
      {true, Will::good_will, false, 0.6, EmotionType::joy},
      {true, Will::good_will, false, -0.6, EmotionType::distress},
      {true, Will::good_will, true, 0.6, EmotionType::hope},
      {true, Will::good_will, true, -0.6, EmotionType::fear},
  };
  std::set<EmotionType> hit;
  for (const auto& r : rows) {
    ProspectRegistry reg;
    CHECK(appraise(input(r.self, r.will, r.prospect, r.d), reg) == r.want);
    hit.insert(r.want);
  }
  CHECK(hit.size() == 8);
}

TEST_CASE("prospect relevance is ignored for fortunes of others") {
  ProspectRegistry reg;
  CHECK(appraise(input(false, Will::good_will, true, 0.4), reg) == EmotionType::happy_for);
  CHECK(reg.pending_count() == 0);
}

TEST_CASE("resolution") {
  ProspectRegistry reg;
  CHECK(appraise(input(true, Will::good_will, true, 0.8), reg) == EmotionType::hope);
  CHECK(reg.pending({"agent", "ev"}));
  CHECK(resolve_prospect(reg, {"agent", "ev"}, true).emotion == EmotionType::satisfaction);
  CHECK_THROWS_AS(resolve_prospect(reg, {"agent", "ev"}, true), NoPendingProspect);

  appraise(input(true, Will::good_will, true, -0.8), reg);
  auto r = reg.resolve({"agent", "ev"}, false);
  CHECK(r.emotion == EmotionType::relief);
  CHECK(r.antecedent.emotion == EmotionType::fear);

  CHECK(resolution_type(EmotionType::hope, false) == EmotionType::disappointment);
  CHECK(resolution_type(EmotionType::fear, true) == EmotionType::fears_confirmed);
  CHECK_THROWS_AS(resolution_type(EmotionType::joy, true), AffectError);
}

TEST_CASE("every emotion type is produced by appraise or resolve") {
  std::set<EmotionType> seen;
  for (bool self : {false, true}) {
    for (Will w : {Will::good_will, Will::ill_will}) {
      for (bool prospect : {false, true}) {
        for (double d : {-0.5, 0.5}) {
          for (bool confirmed : {false, true}) {
            ProspectRegistry reg;
            const EmotionType e = appraise(input(self, w, prospect, d), reg);
            seen.insert(e);
            if (reg.pending({"agent", "ev"})) seen.insert(reg.resolve({"agent", "ev"}, confirmed).emotion);
          }
        }
      }
    }
  }
  CHECK(seen.size() == kAllEmotions.size());
}

TEST_CASE("valence coherence") {
  const std::set<EmotionType> negative{EmotionType::distress, EmotionType::pity, EmotionType::gloating,
                                       EmotionType::fear, EmotionType::fears_confirmed, EmotionType::disappointment};
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> pos(1e-9, 1.0);
  for (int i = 0; i < 2000; ++i) {
    ProspectRegistry reg;
    const auto e = appraise(input(gen() % 2, gen() % 2 ? Will::good_will : Will::ill_will, gen() % 2, pos(gen)), reg);
    CHECK(negative.count(e) == 0);
  }
}

TEST_CASE("prospect conservation under random traffic") {
  std::mt19937 gen(17);
  ProspectRegistry reg;
  const char* contents[] = {"a", "b", "c", "d"};
  for (int i = 0; i < 5000; ++i) {
    AppraisalInput in = input(true, Will::good_will, true, gen() % 2 ? 0.5 : -0.5);
    in.event_content = contents[gen() % 4];
    if (gen() % 3 == 0) {
      try {
        reg.resolve({"agent", in.event_content}, gen() % 2);
      } catch (const NoPendingProspect&) {
      }
    } else {
      appraise(in, reg);
    }
    REQUIRE(reg.registered_count() - reg.resolved_count() == reg.pending_count());
    REQUIRE(reg.pending_count() <= 4);
  }
}

TEST_CASE("input validation") {
  ProspectRegistry reg;
  AppraisalInput in = input(false, Will::good_will, false, 0.5);
  in.will.reset();
  CHECK_THROWS_AS(appraise(in, reg), InvalidAppraisal);
  in = input(true, Will::good_will, false, 1.5);
  CHECK_THROWS_AS(appraise(in, reg), InvalidAppraisal);
  in = input(true, Will::good_will, false, 0.5);
  in.expectation = -0.1;
  CHECK_THROWS_AS(appraise(in, reg), InvalidAppraisal);
}

TEST_CASE("decay") {
  EmotionEpisode e = make_episode(EmotionType::joy, 1.0, "E1", "agent", 0.0, std::log(2.0));
  CHECK(decay_intensity(e, 0.0) == 1.0);
  CHECK(decay_intensity(e, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  e.raw_intensity = 0.8;
  e.decay_rate_b = 0.3;
  CHECK(decay_intensity(e, 2.0) == doctest::Approx(0.8 * std::exp(-0.6)).epsilon(1e-15));
  CHECK(decay_intensity(e, 2.0) == doctest::Approx(0.43905).epsilon(1e-5));

  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    CHECK(decay_intensity(e, a) > decay_intensity(e, b));
    CHECK(decay_intensity(e, b) >= 0.0);
  }

  DecayConfig cfg;
  EmotionEpisode joy = make_episode(EmotionType::joy, 2.4, "E1", "agent", 10.0, cfg.b);
  CHECK(joy.intensity == 1.0);
  CHECK(joy.intensity_at(70.0) == doctest::Approx(0.5));
  CHECK_FALSE(joy.expired_at(70.0, cfg.epsilon));
  CHECK(joy.expired_at(10.0 + 60.0 * 7.0, cfg.epsilon));
}

TEST_CASE("intensity normalisation stays in the unit interval") {
  CHECK(make_episode(EmotionType::fear, 3.0, "", "", 0, 1).intensity == 1.0);
  CHECK(make_episode(EmotionType::fear, 1.5, "", "", 0, 1).intensity == 0.5);
  CHECK(make_episode(EmotionType::joy, -0.7, "", "", 0, 1).intensity == 0.0);
  CHECK(make_episode(EmotionType::happy_for, 0.8, "", "", 0, 1).intensity == doctest::Approx(0.8));
}

TEST_CASE("judge_desirability") {
  DesirabilityTable table = DesirabilityTable::from_json(Json::parse(R"({"entries": {
    "get_acceptance_from_student": {"goal": "get_help_from_students", "sign": 1, "magnitude": 0.8},
    "giantDino_come": {"goal": "avoid_giantDino", "sign": -1, "magnitude": 1.0, "prospect_relevant": true}
  }})"));
  CHECK(judge_desirability(table, "get_acceptance_from_student", "get_help_from_students", 0.8) == 0.8);
  CHECK(judge_desirability(table, "giantDino_come", "avoid_giantDino", 1.0) == -1.0);
  CHECK(judge_desirability(table, "giantDino_come", "avoid_giantDino", 0.0) == 0.0);
  CHECK_THROWS_AS(judge_desirability(table, "giantDino_come", "get_help_from_students", 1.0), UnknownPair);
  CHECK_THROWS_AS(judge_desirability(table, "meteor", "avoid_giantDino", 1.0), UnknownPair);

  // The Dilong case: self-endured, prospect relevant, undesirable.
  ProspectRegistry reg;
  CHECK(appraise(table.appraisal_input("giantDino_come", "avatarA", "student"), reg) == EmotionType::fear);
}

TEST_CASE("shipped desirability table") {
  auto table = DesirabilityTable::load(testing::data_dir() / "vs" / "desirability.json");
  ProspectRegistry reg;
  auto emotion = [&](const char* ev) { return appraise(table.appraisal_input(ev, "water_molecule", "student"), reg); };
  CHECK(emotion("E1") == EmotionType::joy);
  CHECK(emotion("E2:agree") == EmotionType::joy);
  CHECK(emotion("E2:reject") == EmotionType::distress);
  CHECK(emotion("E4:clean") == EmotionType::happy_for);
  CHECK(emotion("E5") == EmotionType::hope);
  CHECK(*table.at("E6:success").resolves == "E5");
  CHECK(DesirabilityTable::from_json(table.to_json()).to_json() == table.to_json());
}
