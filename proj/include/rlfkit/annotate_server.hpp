#pragma once

// JSON-over-HTTP annotation API. Paths:
//   GET  /api/samples/next?annotator_id=A   next incomplete sample, or {"done": true}
//   GET  /api/samples/<id>?annotator_id=A   one sample with the annotator's prior answers
//   POST /api/annotations                   store one AnnotationRecord
//   GET  /api/progress
//   GET  /api/aggregate
// Requires vendor httplib.h.

#include <string>

#include <httplib.h>

#include "rlfkit/annotate.hpp"

namespace rlfkit {

class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationStore& store) : store_(store) { routes(); }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port; returns it, or -1 on failure. Call listen_after_bind next.
  int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  static void send(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& kind, const std::string& msg) {
    send(res, status, ordered_json{{"error", kind}, {"message", msg}});
  }

  static std::string annotator_param(const httplib::Request& req) {
    if (req.has_param("annotator_id")) return req.get_param_value("annotator_id");
    if (req.has_param("annotator")) return req.get_param_value("annotator");
    return {};
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const NotFoundError& e) {
      fail(res, 404, "not_found", e.what());
    } catch (const ValidationError& e) {
      fail(res, 422, "validation", e.what());
    } catch (const json::exception& e) {
      fail(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      fail(res, 500, "internal", e.what());
    }
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/api/samples/next", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto a = annotator_param(req);
        if (a.empty()) throw ValidationError("annotator_id is required");
        auto next = store_.next_for(a);
        if (!next) return send(res, 200, ordered_json{{"done", true}});
        send(res, 200, ordered_json{{"done", false}, {"sample", *next}});
      });
    });

    server_.Get(R"(/api/samples/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, store_.sample_view(req.matches[1], annotator_param(req))); });
    });

    server_.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = json::parse(req.body);
        if (!body.is_object()) throw ValidationError("body must be a JSON object");
        std::optional<std::string> candidate;
        if (field::has(body, "candidate_id")) {
          if (!body["candidate_id"].is_string()) throw ValidationError("candidate_id must be a string");
          candidate = body["candidate_id"].get<std::string>();
        }
        auto j = body;
        j.erase("candidate_id");
        auto stored = store_.submit(annotation_from_json(j, !candidate), candidate);
        send(res, 201, ordered_json{{"stored", true}, {"record", to_json(stored)}});
      });
    });

    server_.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, store_.progress()); });
    });

    server_.Get("/api/aggregate", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, store_.aggregate()); });
    });
  }

  AnnotationStore& store_;
  httplib::Server server_;
};

}  // namespace rlfkit
