#include <httplib.h>

#include <atomic>
#include <thread>

#include "ata/session/session.hpp"

namespace ata::session {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json error_body(std::string_view kind, std::string_view message) { return Json{{"error", kind}, {"message", message}}; }

/// Maps library errors onto status codes; everything else is a 500.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const UnknownSession& e) {
    reply(res, 404, error_body("UnknownSession", e.what()));
  } catch (const SessionExpired& e) {
    reply(res, 410, error_body("SessionExpired", e.what()));
  } catch (const authoring::UnknownCatalog& e) {
    reply(res, 404, error_body("UnknownCatalog", e.what()));
  } catch (const authoring::PrerequisiteViolation& e) {
    Json body = error_body("PrerequisiteViolation", e.what());
    body["goal"] = e.goal();
    body["missing"] = e.missing();
    reply(res, 422, body);
  } catch (const authoring::DuplicateSelection& e) {
    reply(res, 422, error_body("DuplicateSelection", e.what()));
  } catch (const authoring::CatalogError& e) {
    reply(res, 422, error_body(authoring::to_string(e.kind()), e.what()));
  } catch (const DocumentError& e) {
    reply(res, 400, error_body("BadRequest", e.what()));
  } catch (const teach::TeachError& e) {
    reply(res, 400, error_body("BadRequest", e.what()));
  } catch (const Json::exception& e) {
    reply(res, 400, error_body("BadRequest", e.what()));
  } catch (const std::exception& e) {
    reply(res, 500, error_body("Internal", e.what()));
  }
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  return parse_json(req.body, "request body");
}

std::string sse(const PushEvent& e) {
  return "id: " + std::to_string(e.id) + "\nevent: " + e.kind + "\ndata: " + e.data.dump() + "\n\n";
}

}  // namespace

struct Server::Impl {
  SessionManager& manager;
  httplib::Server http;
  std::thread thread;
  std::atomic<bool> stopping{false};

  explicit Impl(SessionManager& m) : manager(m) { routes(); }

  void routes() {
    http.Get("/catalogs", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, manager.catalogs()); });
    });
    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = body_of(req);
        reply(res, 201, manager.create(body.value("catalog_id", "vs_transport")));
      });
    });
    http.Get(R"(/sessions/([0-9a-f]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, manager.state(req.matches[1])); });
    });
    http.Post(R"(/sessions/([0-9a-f]+)/map)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = body_of(req);
        // Either the map itself or {"map": {...}}.
        reply(res, 200, manager.submit_map(req.matches[1], body.contains("map") ? body.at("map") : body));
      });
    });
    http.Post(R"(/sessions/([0-9a-f]+)/practice)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = body_of(req);
        reply(res, 200, manager.request_practice(req.matches[1], body.value("goal", "entering_root")));
      });
    });
    http.Post(R"(/sessions/([0-9a-f]+)/path)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = body_of(req);
        reply(res, 200, manager.select_path(req.matches[1], body.at("goals").get<std::vector<std::string>>()));
      });
    });
    http.Get(R"(/sessions/([0-9a-f]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        std::uint64_t after = 0;
        if (req.has_header("Last-Event-ID")) after = std::stoull(req.get_header_value("Last-Event-ID"));
        if (req.has_param("last_event_id")) after = std::stoull(req.get_param_value("last_event_id"));
        // follow=0 returns the backlog and closes; the default keeps streaming.
        const bool follow = !req.has_param("follow") || req.get_param_value("follow") != "0";
        manager.events(id, after);  // 404 before the stream starts
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, after, follow](std::size_t, httplib::DataSink& sink) mutable {
              try {
                while (!stopping) {
                  auto batch = manager.events(id, after, std::chrono::milliseconds(follow ? 500 : 0));
                  for (const auto& e : batch) {
                    const std::string frame = sse(e);
                    if (!sink.write(frame.data(), frame.size())) return false;
                    after = e.id;
                  }
                  if (!follow) break;
                  if (batch.empty()) {
                    static const std::string ping = ": ping\n\n";
                    if (!sink.is_writable() || !sink.write(ping.data(), ping.size())) return false;
                  }
                }
              } catch (const std::exception&) {
                // Session gone: end the stream.
              }
              sink.done();
              return true;
            });
      });
    });
  }
};

Server::Server(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) {}

Server::~Server() { stop(); }

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::start(const std::string& host) {
  const int port = impl_->http.bind_to_any_port(host);
  if (port < 0) return port;
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port;
}

void Server::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ata::session
