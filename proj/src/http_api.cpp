#include "lexloop/http_api.hpp"

#include <httplib.h>

#include "lexloop/constraints.hpp"

namespace lexloop {

using json = nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message, json extra = nullptr) {
  json body = {{"error", {{"code", to_string(code)}, {"message", message}}}};
  if (!extra.is_null()) body["error"]["details"] = std::move(extra);
  send_json(res, http_status(code), body);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::validation, std::string("malformed document: ") + e.what());
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
    }
  };
}


}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::exhausted: return 409;
    case ErrorCode::infeasible: return 422;
    case ErrorCode::unsupported_scale: return 413;
    case ErrorCode::io: return 500;
  }
  return 500;
}

struct HttpApi::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Get("/v1/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, {{"sessions", service.session_ids()}});
               }));

    server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  const auto& domain = body.contains("domain") ? body.at("domain") : body;
                  const auto id = service.create_session(domain);
                  send_json(res, 201, {{"id", id}, {"status", to_string(SessionStatus::eliciting)}});
                }));

    server.Get(R"(/v1/sessions/([A-Za-z0-9]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.session_state(req.matches[1]));
               }));

    server.Post(R"(/v1/sessions/([A-Za-z0-9]+)/query)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto domain = service.session_domain(id);
                  const auto pair = service.next_query(id);
                  send_json(res, 200,
                            {{"first", alternative_to_json(domain, pair.first)},
                             {"second", alternative_to_json(domain, pair.second)}});
                }));

    server.Post(R"(/v1/sessions/([A-Za-z0-9]+)/answers)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto body = parse_body(req);
                  const auto domain = service.session_domain(id);
                  if (!body.contains("first") || !body.contains("second") || !body.contains("choice"))
                    fail(ErrorCode::validation, "an answer needs 'first', 'second' and 'choice'");
                  const AlternativePair pair{alternative_from_json(domain, body.at("first")),
                                             alternative_from_json(domain, body.at("second"))};
                  service.submit_answer(id, pair, choice_from_string(body.at("choice").get<std::string>()));
                  const auto state = service.session_state(id);
                  send_json(res, 200, {{"accepted", true}, {"answered", state.at("answered").size()}});
                }));

    server.Post(R"(/v1/sessions/([A-Za-z0-9]+)/learn)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto body = parse_body(req);
                  const auto domain = service.session_domain(id);
                  const auto config_doc = body.contains("config") ? body.at("config") : json::object();
                  auto config = config_from_json(domain, config_doc);
                  if (!config_doc.contains("seed")) config.seed = service.config().default_seed;
                  std::optional<double> threshold;
                  if (body.contains("threshold") && !body.at("threshold").is_null())
                    threshold = body.at("threshold").get<double>();
                  send_json(res, 200, service.learn_model(id, config, threshold));
                }));

    server.Post(R"(/v1/sessions/([A-Za-z0-9]+)/feedback)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const auto body = parse_body(req);
                  const auto domain = service.session_domain(id);
                  const auto constraints = constraints_from_json(domain, body.contains("constraints") ? body.at("constraints") : body);
                  const auto report = service.submit_feedback(id, constraints);
                  const auto doc = feasibility_to_json(domain, report);
                  if (!report.feasible) {
                    send_error(res, ErrorCode::infeasible, "feedback conflicts with itself or earlier feedback", doc);
                    return;
                  }
                  send_json(res, 200, {{"accepted", constraints.size()}, {"report", doc}});
                }));

    server.Post(R"(/v1/sessions/([A-Za-z0-9]+)/finalize)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  service.finalize(id);
                  send_json(res, 200, {{"status", to_string(SessionStatus::finalized)}});
                }));

    server.Get(R"(/v1/sessions/([A-Za-z0-9]+)/models/latest)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.get_model(req.matches[1]));
               }));

    server.Get(R"(/v1/sessions/([A-Za-z0-9]+)/models/(\d+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::size_t version = 0;
                 try {
                   version = std::stoul(req.matches[2]);
                 } catch (const std::exception&) {
                   fail(ErrorCode::not_found, "no such model version");
                 }
                 send_json(res, 200, service.get_model(req.matches[1], version));
               }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404) send_error(res, ErrorCode::not_found, "no such endpoint");
    });
  }
};

HttpApi::HttpApi(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpApi::~HttpApi() = default;

int HttpApi::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpApi::serve() { impl_->server.listen_after_bind(); }

void HttpApi::stop() { impl_->server.stop(); }

}  // namespace lexloop
