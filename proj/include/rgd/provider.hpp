#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rgd/llm.hpp"

namespace rgd {

// An OpenAI-compatible chat-completions provider.
struct ProviderInfo {
  std::string id;
  std::string endpoint;  // base URL; "/chat/completions" is appended
  std::string api_key_env;
  std::vector<std::string> models;  // suggestions only, any name is passed through
};

const std::vector<ProviderInfo>& known_providers();
const ProviderInfo* find_provider(std::string_view id);

struct ProviderConfig {
  std::string provider;
  std::string model;
  std::string api_key;
  std::string endpoint;
  std::chrono::seconds timeout{60};
};

// Fills endpoint and key from the provider table and the environment.
// Throws PreconditionError for an unknown provider or a missing credential.
ProviderConfig resolve_provider(std::string_view provider, std::string_view model,
                                std::optional<std::string> api_key = std::nullopt,
                                std::optional<std::string> endpoint = std::nullopt,
                                std::chrono::seconds timeout = std::chrono::seconds{60});

struct ChatRequest {
  std::string origin;  // scheme://host[:port]
  std::string path;
  std::map<std::string, std::string> headers;
  nlohmann::json body;
};

// service -> system, domain-expert -> user, assistant -> assistant.
std::string_view provider_role(Role role);

ChatRequest shape_request(const ProviderConfig& config, std::span<const Message> prompt);

// Extracts choices[0].message.content; throws LlmError otherwise.
std::string read_completion(std::string_view response_body);

class ProviderClient : public LlmClient {
 public:
  explicit ProviderClient(ProviderConfig config);

  std::string complete(std::span<const Message> prompt) override;

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
};

}  // namespace rgd
