#include <functional>

#include <httplib.h>

#include "rgd/api_service.hpp"
#include "text_util.hpp"

namespace rgd {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<std::string>& diagnostics = {}) {
  send_json(res, status, {{"error", message}, {"diagnostics", diagnostics}});
}

// Runs a handler and turns every error into a JSON error response.
void guarded(httplib::Response& res, const std::function<void()>& handler) {
  try {
    handler();
  } catch (const ApiError& e) {
    send_error(res, e.status(), e.what(), e.diagnostics());
  } catch (const ParseError& e) {
    const std::string where = e.unit() == ParseError::Unit::line
                                  ? "line " + std::to_string(e.location())
                                  : "byte " + std::to_string(e.location());
    send_error(res, 422, e.what(), {where});
  } catch (const SchemaError& e) {
    send_error(res, 422, e.what(), {e.field()});
  } catch (const EmptyLogError& e) {
    send_error(res, 422, e.what());
  } catch (const DiscoveryError& e) {
    send_error(res, 422, e.what(), e.blocking_rules());
  } catch (const PreconditionError& e) {
    send_error(res, 400, e.what());
  } catch (const LlmError& e) {
    send_json(res, 502,
              {{"error", e.what()}, {"diagnostics", nlohmann::json::array()},
               {"retryable", e.retryable()}});
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, std::string("malformed request body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

nlohmann::json body_json(const httplib::Request& req) {
  if (detail::trim(req.body).empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ApiError(400, std::string("request body is not valid JSON: ") + e.what());
  }
}

LogFormat format_of(std::string_view name, std::string_view content) {
  if (name == "csv") return LogFormat::csv;
  if (name == "xes") return LogFormat::xes;
  if (!name.empty()) throw ApiError(400, "format must be csv or xes");
  return detail::trim(content).starts_with('<') ? LogFormat::xes : LogFormat::csv;
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) { routes(); }

  void routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Get("/providers", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.providers()); });
    });

    // Raw file body with ?format=csv|xes, or JSON {"format", "content", "columns"}.
    server.Post("/logs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        CsvConfig csv;
        std::string content = req.body;
        std::string format = req.get_param_value("format");
        if (req.get_header_value("Content-Type").starts_with("application/json")) {
          const auto j = body_json(req);
          content = j.at("content").get<std::string>();
          format = j.value("format", format);
          if (j.contains("columns")) {
            const auto& c = j["columns"];
            csv.case_column = c.value("case", csv.case_column);
            csv.activity_column = c.value("activity", csv.activity_column);
            csv.timestamp_column = c.value("timestamp", csv.timestamp_column);
          }
        }
        if (req.has_param("case_column")) csv.case_column = req.get_param_value("case_column");
        if (req.has_param("activity_column")) {
          csv.activity_column = req.get_param_value("activity_column");
        }
        if (req.has_param("timestamp_column")) {
          csv.timestamp_column = req.get_param_value("timestamp_column");
        }
        send_json(res, 201, service.upload_log(content, format_of(format, content), csv));
      });
    });

    server.Get(R"(/logs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.get_log(req.matches[1])); });
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto j = body_json(req);
        if (!j.contains("log_id") || !j["log_id"].is_string()) {
          throw ApiError(400, "\"log_id\" is required");
        }
        const auto client = client_config_from_json(j.value("client", nlohmann::json()));
        send_json(res, 201, service.create_session(j["log_id"].get<std::string>(), client));
      });
    });

    server.Get(R"(/sessions/([0-9a-f]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { send_json(res, 200, service.get_session(req.matches[1])); });
               });

    server.Post(R"(/sessions/([0-9a-f]+)/messages)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    const auto j = body_json(req);
                    if (!j.contains("text") || !j["text"].is_string()) {
                      throw ApiError(400, "\"text\" is required");
                    }
                    send_json(res, 200,
                              service.post_message(req.matches[1], j["text"].get<std::string>()));
                  });
                });

    server.Get(R"(/sessions/([0-9a-f]+)/rules)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { send_json(res, 200, service.get_rules(req.matches[1])); });
               });

    server.Put(R"(/sessions/([0-9a-f]+)/selection)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                   send_json(res, 200, service.put_selection(req.matches[1], body_json(req)));
                 });
               });

    server.Post(R"(/sessions/([0-9a-f]+)/discover)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    send_json(res, 200, service.run_discovery(req.matches[1], body_json(req)));
                  });
                });

    server.Get(R"(/sessions/([0-9a-f]+)/model)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                   const auto format =
                       req.has_param("format") ? req.get_param_value("format") : "text";
                   const auto body = service.get_model(req.matches[1], format);
                   const char* type = format == "json"  ? "application/json"
                                      : format == "dot" ? "text/vnd.graphviz"
                                                        : "text/plain; charset=utf-8";
                   res.status = 200;
                   res.set_content(body, type);
                 });
               });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_json(res, res.status,
                  {{"error", res.status == 404 ? "no such endpoint" : "request failed"},
                   {"diagnostics", nlohmann::json::array()}});
      }
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace rgd
