#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rgd/errors.hpp"
#include "rgd/event_log.hpp"
#include "rgd/llm.hpp"

namespace rgd {

// A request the service refuses, with an HTTP-style status.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& what, std::vector<std::string> diagnostics = {})
      : Error(what), status_(status), diagnostics_(std::move(diagnostics)) {}

  int status() const { return status_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  int status_;
  std::vector<std::string> diagnostics_;
};

enum class LogFormat { csv, xes };

// How a session talks to an LLM. provider "scripted" replays `responses`.
struct ClientConfig {
  std::string provider = "scripted";
  std::string model;
  std::optional<std::string> api_key;  // never persisted
  std::optional<std::string> endpoint;
  int timeout_seconds = 60;
  std::vector<std::string> responses;
  PromptVariant variant = PromptVariant::interactive;
  std::size_t max_attempts = Conversation::kDefaultMaxAttempts;
};

ClientConfig client_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClientConfig& c);  // without api_key

using ClientFactory = std::function<std::unique_ptr<LlmClient>(const ClientConfig&)>;

// Scripted configs become ScriptedClient, everything else a ProviderClient.
std::unique_ptr<LlmClient> default_client_factory(const ClientConfig& config);

struct ServiceOptions {
  std::optional<std::filesystem::path> state_dir;  // JSON snapshots when set
  ClientFactory client_factory = default_client_factory;
};

// In-memory sessions over uploaded logs. Every method returns a JSON document
// suitable as an HTTP response body and throws ApiError or a library error.
//
// Thread-safe. Mutating session operations fail with 409 when another one is
// in flight on the same session. Responses carry the session's pending
// warnings; mutating calls clear them, reads leave them in place.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  nlohmann::json upload_log(std::string_view content, LogFormat format,
                            const CsvConfig& csv = {});
  nlohmann::json get_log(const std::string& log_id) const;

  nlohmann::json create_session(const std::string& log_id, const ClientConfig& client);
  nlohmann::json get_session(const std::string& session_id) const;

  nlohmann::json post_message(const std::string& session_id, const std::string& text);
  nlohmann::json get_rules(const std::string& session_id) const;
  // body: {"indices": [..]} and/or {"rules": [{"template", "activities"}]}
  nlohmann::json put_selection(const std::string& session_id, const nlohmann::json& body);
  // body: {"sup": x, "fallback": "warn"|"abort"}
  nlohmann::json run_discovery(const std::string& session_id, const nlohmann::json& body);
  // format: text | json | dot
  std::string get_model(const std::string& session_id, std::string_view format) const;

  nlohmann::json providers() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Plain HTTP binding of a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the chosen port (port 0 picks a free one); -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rgd
