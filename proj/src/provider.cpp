#include "rgd/provider.hpp"

#include <cstdlib>

#include <httplib.h>

#include "rgd/errors.hpp"

namespace rgd {

const std::vector<ProviderInfo>& known_providers() {
  static const std::vector<ProviderInfo> providers = {
      {"openai", "https://api.openai.com/v1", "OPENAI_API_KEY", {"gpt-4o", "gpt-4o-mini"}},
      {"deepseek", "https://api.deepseek.com", "DEEPSEEK_API_KEY", {"deepseek-chat"}},
      {"google",
       "https://generativelanguage.googleapis.com/v1beta/openai",
       "GEMINI_API_KEY",
       {"gemini-1.5-pro", "gemini-1.5-flash"}},
  };
  return providers;
}

const ProviderInfo* find_provider(std::string_view id) {
  for (const auto& p : known_providers()) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

ProviderConfig resolve_provider(std::string_view provider, std::string_view model,
                                std::optional<std::string> api_key,
                                std::optional<std::string> endpoint,
                                std::chrono::seconds timeout) {
  const auto* info = find_provider(provider);
  if (info == nullptr) {
    throw PreconditionError("unknown provider \"" + std::string(provider) + "\"");
  }
  if (model.empty()) throw PreconditionError("no model name given for " + info->id);
  ProviderConfig config{info->id, std::string(model), {}, endpoint.value_or(info->endpoint),
                        timeout};
  if (api_key && !api_key->empty()) {
    config.api_key = std::move(*api_key);
  } else if (const char* env = std::getenv(info->api_key_env.c_str()); env && *env) {
    config.api_key = env;
  } else {
    throw PreconditionError("no API key for " + info->id + "; set " + info->api_key_env +
                            " or pass a key");
  }
  return config;
}

std::string_view provider_role(Role role) {
  switch (role) {
    case Role::service:
      return "system";
    case Role::domain_expert:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

ChatRequest shape_request(const ProviderConfig& config, std::span<const Message> prompt) {
  std::string base = config.endpoint;
  while (base.ends_with('/')) base.pop_back();
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) {
    throw PreconditionError("endpoint must start with http:// or https://: " + config.endpoint);
  }
  const auto path_start = base.find('/', scheme_end + 3);
  ChatRequest req;
  req.origin = base.substr(0, path_start);
  req.path = (path_start == std::string::npos ? "" : base.substr(path_start)) + "/chat/completions";
  req.headers = {{"Authorization", "Bearer " + config.api_key}};

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : prompt) {
    messages.push_back({{"role", std::string(provider_role(m.role))}, {"content", m.text}});
  }
  req.body = {{"model", config.model}, {"messages", std::move(messages)}, {"stream", false}};
  return req;
}

std::string read_completion(std::string_view response_body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::parse_error& e) {
    throw LlmError(std::string("provider returned non-JSON body: ") + e.what(), true);
  }
  const auto* content = j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()
                            ? &j["choices"][0]
                            : nullptr;
  if (content && content->contains("message") && (*content)["message"].contains("content") &&
      (*content)["message"]["content"].is_string()) {
    return (*content)["message"]["content"].get<std::string>();
  }
  throw LlmError("provider response has no choices[0].message.content", false);
}

ProviderClient::ProviderClient(ProviderConfig config) : config_(std::move(config)) {}

std::string ProviderClient::complete(std::span<const Message> prompt) {
  const auto req = shape_request(config_, prompt);
  httplib::Client cli(req.origin);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  cli.set_connection_timeout(secs);
  cli.set_read_timeout(secs);
  cli.set_write_timeout(secs);
  httplib::Headers headers(req.headers.begin(), req.headers.end());
  auto res = cli.Post(req.path, headers, req.body.dump(), "application/json");
  if (!res) {
    throw LlmError("request to " + req.origin + " failed: " + httplib::to_string(res.error()),
                   true);
  }
  if (res->status == 401 || res->status == 403) {
    throw LlmError("provider rejected the credential (HTTP " + std::to_string(res->status) + ")",
                   false);
  }
  if (res->status == 429 || res->status >= 500) {
    throw LlmError("provider unavailable (HTTP " + std::to_string(res->status) + ")", true);
  }
  if (res->status != 200) {
    throw LlmError("provider returned HTTP " + std::to_string(res->status) + ": " + res->body,
                   false);
  }
  return read_completion(res->body);
}

}  // namespace rgd
