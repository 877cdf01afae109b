#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "ata/affect/desirability.hpp"
#include "ata/session/session.hpp"
#include "support.hpp"

using namespace ata;
using namespace ata::session;

namespace {

struct FakeClock {
  std::shared_ptr<std::atomic<std::int64_t>> seconds = std::make_shared<std::atomic<std::int64_t>>(0);
  std::function<Clock::time_point()> fn() const {
    auto s = seconds;
    return [s] { return Clock::time_point{} + std::chrono::seconds(s->load()); };
  }
  void advance(std::int64_t by) { *seconds += by; }
};

SessionOptions options(const FakeClock& clock) {
  SessionOptions o;
  o.data_root = testing::data_dir();
  o.clock = clock.fn();
  return o;
}

Json osmosis_map() { return testing::data_json("vs/maps/osmosis.json"); }

Json broken_map() {
  Json m = osmosis_map();
  m["links"].push_back({{"from", m["nodes"][0]["id"]}, {"to", "nowhere"}, {"relation", m["links"][0]["relation"]}});
  return m;
}

bool has_emotion(const Json& response, std::string_view emotion) {
  const auto& es = response.at("emotions");
  return std::any_of(es.begin(), es.end(), [&](const Json& e) { return e.at("emotion") == emotion; });
}

/// Responses minus the parts that name the session.
Json comparable(Json j) {
  j.erase("session_id");
  return j;
}

}  // namespace

TEST_CASE("sessions start with the agent asking for help") {
  FakeClock clock;
  SessionManager m(options(clock));
  const Json a = m.create("vs_transport");
  const Json b = m.create("vs_transport");
  CHECK(a.at("session_id") != b.at("session_id"));
  CHECK(a.at("session_id").get<std::string>().size() == 32);
  CHECK(a.at("agent").at("role") == "water_molecule");
  CHECK(has_emotion(a, "joy"));  // E1 appraised
  const auto& msgs = a.at("messages");
  CHECK(std::any_of(msgs.begin(), msgs.end(), [](const Json& x) {
    return x.at("text").get<std::string>().find("help") != std::string::npos;
  }));
  CHECK_THROWS_AS(m.create("no_such_catalog"), authoring::UnknownCatalog);
  CHECK_THROWS_AS(m.state("feedface"), UnknownSession);
}

TEST_CASE("teaching a map through a session") {
  FakeClock clock;
  SessionManager m(options(clock));
  const std::string id = m.create("vs_transport").at("session_id");

  SUBCASE("a broken map is diagnosed, not learned") {
    const Json r = m.submit_map(id, broken_map());
    CHECK_FALSE(r.at("diagnostics").empty());
    CHECK(r.at("diagnostics")[0].at("code") == "DanglingEndpoint");
    CHECK(r.at("learned") == false);
    CHECK(r.at("alerted") == true);
    CHECK(has_emotion(r, "pity"));
  }
  SUBCASE("a correct map is learned and practice follows by itself") {
    const Json r = m.submit_map(id, osmosis_map());
    CHECK(r.at("learned") == true);
    CHECK(has_emotion(r, "happy_for"));
    REQUIRE(r.contains("practice"));
    CHECK(r.at("practice").at("plan") == Json{"enter_hole(osmosis)", "wait_for(rain)"});
    CHECK(r.at("practice").at("outcome") == "success");
    CHECK(has_emotion(r, "satisfaction"));

    const Json st = m.state(id);
    CHECK(st.at("kb").at("learned_points") == Json{2, 6});
    const std::size_t rules = st.at("kb").at("rules").size();

    // Teaching the same map again changes nothing in the kb.
    const Json again = m.submit_map(id, osmosis_map());
    CHECK(again.at("learned") == true);
    CHECK(again.at("saved").at("added") == 0);
    CHECK(m.state(id).at("kb").at("rules").size() == rules);
  }
  SUBCASE("a rejected document is a client error") {
    CHECK_THROWS(m.submit_map(id, Json{{"nodes", 3}}));
  }
}

TEST_CASE("practice on request") {
  FakeClock clock;
  SessionManager m(options(clock));
  const std::string id = m.create("vs_transport").at("session_id");

  const Json untaught = m.request_practice(id, "entering_root");
  REQUIRE(untaught.contains("practice"));
  CHECK(untaught.at("practice").at("no_solution") == true);
  CHECK(untaught.at("practice").at("outcome") == "no_solution");
  CHECK(untaught.at("practice").at("message").get<std::string>().find("teach me more") != std::string::npos);

  m.submit_map(id, osmosis_map());
  const Json taught = m.request_practice(id, "entering_root");
  CHECK(taught.at("practice").at("outcome") == "success");
  CHECK(has_emotion(taught, "hope"));
  CHECK(has_emotion(taught, "satisfaction"));
}

TEST_CASE("learning paths") {
  FakeClock clock;
  SessionManager m(options(clock));
  const std::string id = m.create("vs_transport").at("session_id");
  const Json ok = m.select_path(id, {"osmosis_L1", "osmosis_L2", "xylem_L1"});
  CHECK(ok.at("path") == Json{"osmosis_L1", "osmosis_L2", "xylem_L1"});
  CHECK(m.state(id).at("path") == ok.at("path"));
  try {
    m.select_path(id, {"osmosis_L2"});
    FAIL("expected a prerequisite violation");
  } catch (const authoring::PrerequisiteViolation& e) {
    CHECK(e.goal() == "osmosis_L2");
    CHECK(e.missing() == "osmosis_L1");
  }
}

TEST_CASE("identical requests on fresh sessions give identical responses") {
  FakeClock clock;
  SessionManager m(options(clock));
  auto script = [&] {
    std::vector<Json> out;
    const Json created = m.create("vs_transport");
    const std::string id = created.at("session_id");
    out.push_back(comparable(created));
    out.push_back(comparable(m.request_practice(id, "entering_root")));
    out.push_back(comparable(m.submit_map(id, broken_map())));
    out.push_back(comparable(m.submit_map(id, osmosis_map())));
    out.push_back(comparable(m.request_practice(id, "entering_root")));
    return out;
  };
  CHECK(script() == script());
}

TEST_CASE("response emotions agree with the appraisal table") {
  FakeClock clock;
  SessionManager m(options(clock));
  const auto table = affect::DesirabilityTable::load(testing::data_dir() / "vs" / "desirability.json");
  const std::string id = m.create("vs_transport").at("session_id");
  std::vector<Json> responses = {m.submit_map(id, broken_map()), m.submit_map(id, osmosis_map()),
                                 m.request_practice(id, "entering_root")};
  std::size_t checked = 0;
  for (const auto& r : responses) {
    for (const auto& e : r.at("emotions")) {
      const auto& entry = table.at(e.at("cause").get<std::string>());
      const auto in = table.appraisal_input(e.at("cause").get<std::string>(), "water_molecule", "student");
      const auto want = entry.resolves ? affect::resolution_type(affect::EmotionType::hope, entry.confirmed)
                                       : affect::appraise_type(in);
      CHECK(e.at("emotion") == affect::to_string(want));
      ++checked;
    }
  }
  CHECK(checked >= 6);
}

TEST_CASE("idle sessions expire") {
  FakeClock clock;
  auto o = options(clock);
  o.idle_timeout = std::chrono::minutes(30);
  SessionManager m(o);
  const std::string a = m.create("vs_transport").at("session_id");
  const std::string b = m.create("vs_transport").at("session_id");
  clock.advance(29 * 60);
  m.state(a);  // reading state does not count as activity
  m.request_practice(b, "entering_root");
  clock.advance(2 * 60);
  CHECK_THROWS_AS(m.submit_map(a, osmosis_map()), SessionExpired);
  CHECK_THROWS_AS(m.state(a), UnknownSession);
  CHECK_NOTHROW(m.state(b));
  clock.advance(31 * 60);
  CHECK(m.expire() == 1);
  CHECK(m.size() == 0);
}

TEST_CASE("a stalled student gets one hint") {
  FakeClock clock;
  SessionManager m(options(clock));
  const std::string id = m.create("vs_transport").at("session_id");
  clock.advance(60);
  CHECK_FALSE(m.state(id).contains("hint"));
  clock.advance(121);
  const Json st = m.state(id);
  REQUIRE(st.contains("hint"));
  CHECK(st.at("hint").at("point") == 2);
  CHECK_FALSE(m.state(id).contains("hint"));
}

TEST_CASE("push events have contiguous ids and resume") {
  FakeClock clock;
  SessionManager m(options(clock));
  const std::string id = m.create("vs_transport").at("session_id");
  m.submit_map(id, osmosis_map());
  const auto all = m.events(id, 0);
  REQUIRE(all.size() > 10);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].id == i + 1);
  CHECK(std::any_of(all.begin(), all.end(), [](const PushEvent& e) { return e.kind == "emotion"; }));
  const auto tail = m.events(id, 5);
  REQUIRE(tail.size() == all.size() - 5);
  CHECK(tail.front().id == 6);

  // A waiting reader wakes when new events land.
  std::vector<PushEvent> got;
  std::thread reader([&] { got = m.events(id, all.size(), std::chrono::seconds(5)); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  m.request_practice(id, "entering_root");
  reader.join();
  REQUIRE_FALSE(got.empty());
  CHECK(got.front().id == all.size() + 1);
}

TEST_CASE("requests on one session are serialised, sessions run in parallel") {
  FakeClock clock;
  SessionManager m(options(clock));
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(m.create("vs_transport").at("session_id"));
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (const auto& id : ids) {
    for (int k = 0; k < 3; ++k) {
      workers.emplace_back([&, id] {
        try {
          m.request_practice(id, "entering_root");
        } catch (...) {
          ++failures;
        }
      });
    }
  }
  for (auto& w : workers) w.join();
  CHECK(failures == 0);
  for (const auto& id : ids) {
    const auto evs = m.events(id, 0);
    for (std::size_t i = 0; i < evs.size(); ++i) CHECK(evs[i].id == i + 1);
  }
}

TEST_CASE("HTTP endpoints") {
  SessionOptions o;
  o.data_root = testing::data_dir();
  SessionManager m(o);
  Server server(m);
  const int port = server.start();
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);

  auto json = [](const httplib::Result& r) { return parse_json(r->body); };

  auto cats = cli.Get("/catalogs");
  REQUIRE(cats);
  CHECK(cats->status == 200);
  CHECK(json(cats)[0].at("catalog_id") == "vs_transport");

  auto bad = cli.Post("/sessions", R"({"catalog_id":"nope"})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 404);
  CHECK(json(bad).at("error") == "UnknownCatalog");

  auto created = cli.Post("/sessions", R"({"catalog_id":"vs_transport"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json(created).at("session_id");
  const std::string base = "/sessions/" + id;

  auto st = cli.Get(base + "/state");
  REQUIRE(st);
  CHECK(st->status == 200);
  CHECK(json(st).at("role") == "water_molecule");
  CHECK(cli.Get("/sessions/00ff/state")->status == 404);

  auto map = cli.Post(base + "/map", Json{{"map", osmosis_map()}}.dump(), "application/json");
  REQUIRE(map);
  CHECK(map->status == 200);
  CHECK(json(map).at("learned") == true);
  CHECK(has_emotion(json(map), "happy_for"));
  CHECK(has_emotion(json(map), "satisfaction"));

  CHECK(cli.Post(base + "/map", "{not json", "application/json")->status == 400);

  auto practice = cli.Post(base + "/practice", R"({"goal":"entering_root"})", "application/json");
  REQUIRE(practice);
  CHECK(json(practice).at("practice").at("outcome") == "success");

  auto path = cli.Post(base + "/path", R"({"goals":["xylem_L2"]})", "application/json");
  REQUIRE(path);
  CHECK(path->status == 422);
  CHECK(json(path).at("error") == "PrerequisiteViolation");
  CHECK(json(path).at("missing") == "xylem_L1");
  CHECK(cli.Post(base + "/path", R"({"goals":["xylem_L1","xylem_L2"]})", "application/json")->status == 200);

  // Push stream: read the backlog, drop the connection, resume after the
  // last id seen and check nothing is skipped.
  auto read_stream = [&](std::uint64_t last, std::size_t want) {
    std::vector<std::uint64_t> ids;
    std::string buffer;
    httplib::Headers h;
    if (last) h.emplace("Last-Event-ID", std::to_string(last));
    cli.Get(base + "/events", h, [&](const char* data, std::size_t n) {
      buffer.append(data, n);
      std::size_t pos;
      while ((pos = buffer.find("\n\n")) != std::string::npos) {
        const std::string frame = buffer.substr(0, pos);
        buffer.erase(0, pos + 2);
        if (frame.rfind("id: ", 0) == 0) ids.push_back(std::stoull(frame.substr(4, frame.find('\n') - 4)));
      }
      return ids.size() < want;
    });
    return ids;
  };
  const auto first = read_stream(0, 10);
  REQUIRE(first.size() >= 10);
  const auto rest = read_stream(first.back(), 5);
  REQUIRE_FALSE(rest.empty());
  CHECK(rest.front() == first.back() + 1);
  for (std::size_t i = 1; i < first.size(); ++i) CHECK(first[i] == first[i - 1] + 1);
  for (std::size_t i = 1; i < rest.size(); ++i) CHECK(rest[i] == rest[i - 1] + 1);

  auto once = cli.Get(base + "/events?follow=0");
  REQUIRE(once);
  CHECK(once->get_header_value("Content-Type").find("text/event-stream") == 0);
  CHECK(once->body.find("event: emotion") != std::string::npos);

  server.stop();
}
