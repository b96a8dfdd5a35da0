#include <httplib.h>

#include "episodekit/service/service.hpp"

namespace episodekit::service {

using nlohmann::json;

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(AnnotationService& s) : service(s) { routes(); }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Runs `fn` with the caller's annotator id and maps errors to responses.
  template <typename Fn>
  void guarded(const httplib::Request& req, httplib::Response& res, Fn fn) {
    try {
      const std::string who = service.authenticate(req.get_header_value("Authorization"));
      fn(who);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), e.body());
    } catch (const json::exception& e) {
      send_json(res, 400, {{"code", "bad_request"}, {"message", e.what()}, {"detail", json::object()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"code", "internal"}, {"message", e.what()}, {"detail", json::object()}});
    }
  }

  static std::string require_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) {
      throw ServiceError(400, "missing_parameter", "query parameter '" + name + "' is required", {{"field", name}});
    }
    return req.get_param_value(name);
  }

  static std::optional<Level> level_param(const httplib::Request& req) {
    if (!req.has_param("level")) return std::nullopt;
    const auto l = level_from_string(req.get_param_value("level"));
    if (!l) throw ServiceError(400, "invalid_parameter", "level must be paragraph or sentence", {{"field", "level"}});
    return l;
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw ServiceError(400, "bad_request", std::string("body is not JSON: ") + e.what());
    }
  }

  void routes() {
    server.Get("/traces", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) { send_json(res, 200, service.list_traces()); });
    });
    server.Get(R"(/traces/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string& who) { send_json(res, 200, service.get_trace(req.matches[1], who)); });
    });
    server.Put("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string& who) { send_json(res, 200, service.submit(who, parse_body(req))); });
    });
    server.Get("/annotations", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) { send_json(res, 200, service.annotations(require_param(req, "set"))); });
    });
    server.Get("/agreement", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) {
        send_json(res, 200,
                  service.agreement(require_param(req, "a"), require_param(req, "b"),
                                    level_param(req).value_or(Level::Sentence)));
      });
    });
    server.Get("/disagreements", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) {
        const bool open_only = req.has_param("status") && req.get_param_value("status") == "open";
        send_json(res, 200,
                  service.disagreements(require_param(req, "a"), require_param(req, "b"), level_param(req), open_only));
      });
    });
    server.Put(R"(/disagreements/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string& who) {
        send_json(res, 200, service.adjudicate(who, req.matches[1], parse_body(req)));
      });
    });
    server.Get("/transitions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) {
        double alpha = 0.0;
        if (req.has_param("alpha")) {
          try {
            alpha = std::stod(req.get_param_value("alpha"));
          } catch (const std::exception&) {
            throw ServiceError(400, "invalid_parameter", "alpha must be a number", {{"field", "alpha"}});
          }
        }
        send_json(res, 200,
                  service.transitions(require_param(req, "set"), alpha, level_param(req).value_or(Level::Sentence)));
      });
    });
    server.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(req, res, [&](const std::string&) {
        const std::string set = require_param(req, "set");
        res.status = 200;
        res.set_header("Content-Disposition", "attachment; filename=\"annotations." + set + ".jsonl\"");
        res.set_content(service.export_set(set), "application/x-ndjson");
      });
    });
  }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace episodekit::service
