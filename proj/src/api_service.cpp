#include "rgd/api_service.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "rgd/declare.hpp"
#include "rgd/imr.hpp"
#include "rgd/process_tree.hpp"
#include "rgd/provider.hpp"
#include "text_util.hpp"

namespace rgd {

ClientConfig client_config_from_json(const nlohmann::json& j) {
  ClientConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ApiError(400, "client configuration must be a JSON object");
  c.provider = j.value("provider", c.provider);
  c.model = j.value("model", c.model);
  if (j.contains("api_key") && j["api_key"].is_string()) c.api_key = j["api_key"].get<std::string>();
  if (j.contains("endpoint") && j["endpoint"].is_string()) {
    c.endpoint = j["endpoint"].get<std::string>();
  }
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  if (j.contains("responses")) c.responses = j["responses"].get<std::vector<std::string>>();
  if (j.contains("prompt_variant")) {
    const auto name = j["prompt_variant"].get<std::string>();
    const auto v = prompt_variant_from_name(name);
    if (!v) throw ApiError(400, "unknown prompt variant \"" + name + "\"");
    c.variant = *v;
  }
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  if (c.max_attempts == 0) throw ApiError(400, "max_attempts must be at least 1");
  return c;
}

nlohmann::json to_json(const ClientConfig& c) {
  nlohmann::json j = {{"provider", c.provider},
                      {"model", c.model},
                      {"timeout_seconds", c.timeout_seconds},
                      {"prompt_variant", std::string(prompt_variant_name(c.variant))},
                      {"max_attempts", c.max_attempts}};
  if (c.endpoint) j["endpoint"] = *c.endpoint;
  if (c.provider == "scripted") j["responses"] = c.responses;
  return j;
}

std::unique_ptr<LlmClient> default_client_factory(const ClientConfig& config) {
  if (config.provider == "scripted") return std::make_unique<ScriptedClient>(config.responses);
  return std::make_unique<ProviderClient>(
      resolve_provider(config.provider, config.model, config.api_key, config.endpoint,
                       std::chrono::seconds{config.timeout_seconds}));
}

namespace {

struct StoredLog {
  std::string id;
  EventLog log;
  ActivitySet activities;
  std::size_t skipped_events = 0;
};

struct Session {
  std::string id;
  std::shared_ptr<const StoredLog> log;
  ClientConfig config;
  std::unique_ptr<LlmClient> client;
  std::string client_error;  // why `client` is null

  std::mutex busy;           // held for a whole mutating operation
  mutable std::mutex state;  // guards the fields below
  Conversation conv;
  std::vector<Rule> rules;
  std::vector<BatchEntry> stats;
  std::vector<Rule> selected;
  std::optional<ProcessTree> model;
  std::size_t model_version = 0;
  std::vector<std::string> warnings;

  Session(std::string id_, std::shared_ptr<const StoredLog> log_, ClientConfig config_)
      : id(std::move(id_)),
        log(std::move(log_)),
        config(std::move(config_)),
        conv(log->activities, config.variant, config.max_attempts) {}
};

nlohmann::json history_json(const std::vector<Message>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : history) {
    out.push_back({{"role", std::string(role_name(m.role))}, {"text", m.text}});
  }
  return out;
}

std::string fraction(const Ratio& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// Caller holds s.state.
nlohmann::json rules_table(const Session& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < s.rules.size(); ++i) {
    auto row = rule_to_json(s.rules[i]);
    row["index"] = i;
    row["selected"] =
        std::find(s.selected.begin(), s.selected.end(), s.rules[i]) != s.selected.end();
    if (i < s.stats.size() && s.stats[i].stats) {
      const auto& st = *s.stats[i].stats;
      row["activated"] = st.activated;
      row["satisfied"] = st.satisfied;
      row["traces"] = st.traces;
      row["support"] = boost::rational_cast<double>(st.support);
      row["confidence"] = boost::rational_cast<double>(st.confidence);
      row["support_fraction"] = fraction(st.support);
      row["confidence_fraction"] = fraction(st.confidence);
    } else if (i < s.stats.size()) {
      row["stats_error"] = s.stats[i].error;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json drain_warnings(Session& s) {
  nlohmann::json w = s.warnings;
  s.warnings.clear();
  return w;
}

std::string format_name(LogFormat f) { return f == LogFormat::csv ? "csv" : "xes"; }

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;

  mutable std::shared_mutex logs_mu;
  std::map<std::string, std::shared_ptr<const StoredLog>> logs;

  mutable std::shared_mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  std::mutex rng_mu;
  std::mt19937_64 rng{std::random_device{}()};

  std::string fresh_id() {
    std::lock_guard lock(rng_mu);
    std::ostringstream ss;
    ss << std::hex;
    ss.width(16);
    ss.fill('0');
    ss << rng();
    return ss.str();
  }

  std::shared_ptr<const StoredLog> find_log(const std::string& id) const {
    std::shared_lock lock(logs_mu);
    const auto it = logs.find(id);
    if (it == logs.end()) throw ApiError(404, "unknown log id \"" + id + "\"");
    return it->second;
  }

  std::shared_ptr<Session> find_session(const std::string& id) const {
    std::shared_lock lock(sessions_mu);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw ApiError(404, "unknown session id \"" + id + "\"");
    return it->second;
  }

  static std::unique_lock<std::mutex> claim(Session& s) {
    std::unique_lock lock(s.busy, std::try_to_lock);
    if (!lock.owns_lock()) {
      throw ApiError(409, "session " + s.id + " is busy with another request; retry later");
    }
    return lock;
  }

  void attach_client(Session& s) {
    try {
      s.client = options.client_factory(s.config);
    } catch (const Error& e) {
      s.client_error = e.what();
    }
  }

  // --- snapshots ---------------------------------------------------------

  std::optional<std::filesystem::path> dir(const char* sub) const {
    if (!options.state_dir) return std::nullopt;
    auto d = *options.state_dir / sub;
    std::filesystem::create_directories(d);
    return d;
  }

  void persist_log(const StoredLog& l) const {
    const auto d = dir("logs");
    if (!d) return;
    const nlohmann::json j = {
        {"id", l.id}, {"csv", to_csv(l.log)}, {"skipped_events", l.skipped_events}};
    write_atomically(*d / (l.id + ".json"), j.dump());
  }

  // Scripted sessions report the replies not yet consumed.
  static nlohmann::json client_json(const Session& s) {
    auto client = to_json(s.config);
    if (const auto* scripted = dynamic_cast<const ScriptedClient*>(s.client.get())) {
      client["responses"] = scripted->remaining();
    }
    return client;
  }

  // Caller holds s.state. Failures become session warnings.
  void persist_session(Session& s) const {
    const auto d = dir("sessions");
    if (!d) return;
    try {
      const auto client = client_json(s);
      nlohmann::json j = {{"id", s.id},
                          {"log_id", s.log->id},
                          {"client", client},
                          {"history", history_json(s.conv.history())},
                          {"rules", rules_to_json(s.rules)},
                          {"selected", rules_to_json(s.selected)},
                          {"model_version", s.model_version},
                          {"warnings", s.warnings}};
      if (s.model) j["model"] = to_json(*s.model);
      write_atomically(*d / (s.id + ".json"), j.dump(2));
    } catch (const std::exception& e) {
      s.warnings.push_back(std::string("snapshot not written: ") + e.what());
    }
  }

  void restore() {
    if (const auto d = dir("logs")) {
      for (const auto& entry : std::filesystem::directory_iterator(*d)) {
        if (entry.path().extension() != ".json") continue;
        const auto j = nlohmann::json::parse(read_file(entry.path()));
        auto l = std::make_shared<StoredLog>();
        l->id = j.at("id").get<std::string>();
        l->log = parse_csv(j.at("csv").get<std::string>());
        l->activities = alphabet(l->log);
        l->skipped_events = j.value("skipped_events", std::size_t{0});
        logs.emplace(l->id, std::move(l));
      }
    }
    if (const auto d = dir("sessions")) {
      for (const auto& entry : std::filesystem::directory_iterator(*d)) {
        if (entry.path().extension() != ".json") continue;
        const auto j = nlohmann::json::parse(read_file(entry.path()));
        const auto log_it = logs.find(j.at("log_id").get<std::string>());
        if (log_it == logs.end()) continue;
        auto s = std::make_shared<Session>(j.at("id").get<std::string>(), log_it->second,
                                           client_config_from_json(j.at("client")));
        std::vector<Message> history;
        for (const auto& m : j.at("history")) {
          const auto role = role_from_name(m.at("role").get<std::string>());
          if (!role) continue;
          history.push_back({*role, m.at("text").get<std::string>()});
        }
        s->conv.restore(std::move(history));
        s->rules = rules_from_json(j.at("rules"), s->log->activities);
        s->stats = batch_stats(s->rules, s->log->log);
        s->selected = rules_from_json(j.at("selected"), s->log->activities);
        s->conv.select(s->selected);
        if (j.contains("model")) s->model = tree_from_json(j["model"]);
        s->model_version = j.value("model_version", std::size_t{0});
        s->warnings = j.value("warnings", std::vector<std::string>{});
        attach_client(*s);
        sessions.emplace(s->id, std::move(s));
      }
    }
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->restore();
}

Service::~Service() = default;

nlohmann::json Service::upload_log(std::string_view content, LogFormat format,
                                   const CsvConfig& csv) {
  auto l = std::make_shared<StoredLog>();
  if (format == LogFormat::csv) {
    l->log = parse_csv(content, csv);
  } else {
    auto r = parse_xes(content);
    l->log = std::move(r.log);
    l->skipped_events = r.skipped_events;
  }
  l->activities = alphabet(l->log);
  {
    std::unique_lock lock(impl_->logs_mu);
    do {
      l->id = impl_->fresh_id();
    } while (impl_->logs.contains(l->id));
    impl_->logs.emplace(l->id, l);
  }
  impl_->persist_log(*l);
  auto j = get_log(l->id);
  j["format"] = format_name(format);
  return j;
}

nlohmann::json Service::get_log(const std::string& log_id) const {
  const auto l = impl_->find_log(log_id);
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& a : l->activities) acts.push_back(a.label());
  return {{"id", l->id},
          {"traces", l->log.trace_count()},
          {"events", l->log.event_count()},
          {"variants", l->log.variants().size()},
          {"activities", acts},
          {"skipped_events", l->skipped_events}};
}

nlohmann::json Service::create_session(const std::string& log_id, const ClientConfig& client) {
  const auto l = impl_->find_log(log_id);
  std::unique_ptr<LlmClient> llm;
  try {
    llm = impl_->options.client_factory(client);
  } catch (const Error& e) {
    throw ApiError(400, std::string("cannot initialise the LLM client: ") + e.what());
  }
  std::shared_ptr<Session> s;
  {
    std::unique_lock lock(impl_->sessions_mu);
    std::string id;
    do {
      id = impl_->fresh_id();
    } while (impl_->sessions.contains(id));
    s = std::make_shared<Session>(id, l, client);
    s->client = std::move(llm);
    impl_->sessions.emplace(id, s);
  }
  std::lock_guard state(s->state);
  impl_->persist_session(*s);
  return {{"id", s->id}, {"log_id", l->id}, {"client", Impl::client_json(*s)}};
}

nlohmann::json Service::get_session(const std::string& session_id) const {
  const auto s = impl_->find_session(session_id);
  std::lock_guard state(s->state);
  return {{"id", s->id},
          {"log_id", s->log->id},
          {"client", Impl::client_json(*s)},
          {"history", history_json(s->conv.history())},
          {"rules", rules_table(*s)},
          {"selected", rules_to_json(s->selected)["constraints"]},
          {"model_version", s->model_version},
          {"warnings", s->warnings}};
}

nlohmann::json Service::post_message(const std::string& session_id, const std::string& text) {
  const auto s = impl_->find_session(session_id);
  const auto busy = Impl::claim(*s);
  if (!s->client) {
    throw ApiError(400, "session has no usable LLM client: " + s->client_error);
  }
  if (detail::trim(text).empty()) throw ApiError(400, "message text is empty");

  Conversation conv = [&] {
    std::lock_guard state(s->state);
    return s->conv;
  }();
  CycleResult result;
  try {
    result = run_cycle(conv, *s->client, {Role::domain_expert, text}, &s->log->log);
  } catch (...) {
    // Keep every exchange that completed before the failure.
    std::lock_guard state(s->state);
    s->conv = std::move(conv);
    impl_->persist_session(*s);
    throw;
  }

  std::lock_guard state(s->state);
  s->conv = std::move(conv);
  nlohmann::json out = {{"invocations", result.invocations},
                        {"error_cycles", result.error_cycles},
                        {"validation_attempts", result.validation_attempts}};
  if (auto* c = std::get_if<Clarification>(&result.outcome)) {
    out["outcome"] = "clarification";
    out["text"] = c->text;
  } else if (auto* ready = std::get_if<RulesReady>(&result.outcome)) {
    s->rules = std::move(ready->rules);
    s->stats = std::move(ready->stats);
    out["outcome"] = "rules";
    out["rules"] = rules_table(*s);
  } else {
    const auto& failure = std::get<Failure>(result.outcome);
    out["outcome"] = "failure";
    out["message"] = "no valid rule set after " + std::to_string(result.invocations) +
                     " attempts";
    out["transcript"] = failure.transcript;
  }
  impl_->persist_session(*s);
  out["warnings"] = drain_warnings(*s);
  return out;
}

nlohmann::json Service::get_rules(const std::string& session_id) const {
  const auto s = impl_->find_session(session_id);
  std::lock_guard state(s->state);
  return {{"rules", rules_table(*s)},
          {"selected", rules_to_json(s->selected)["constraints"]},
          {"warnings", s->warnings}};
}

nlohmann::json Service::put_selection(const std::string& session_id, const nlohmann::json& body) {
  const auto s = impl_->find_session(session_id);
  const auto busy = Impl::claim(*s);
  if (!body.is_object()) throw ApiError(400, "selection body must be a JSON object");

  std::lock_guard state(s->state);
  std::vector<Rule> chosen;
  std::vector<std::string> problems;
  const auto add = [&](const Rule& r) {
    if (std::find(chosen.begin(), chosen.end(), r) == chosen.end()) chosen.push_back(r);
  };
  if (body.contains("indices")) {
    if (!body["indices"].is_array()) throw ApiError(400, "\"indices\" must be an array");
    for (const auto& i : body["indices"]) {
      if (!i.is_number_integer() || i.get<std::int64_t>() < 0 ||
          i.get<std::uint64_t>() >= s->rules.size()) {
        problems.push_back("index " + i.dump() + " does not name a presented rule (" +
                           std::to_string(s->rules.size()) + " available)");
        continue;
      }
      add(s->rules[i.get<std::size_t>()]);
    }
  }
  if (body.contains("rules")) {
    if (!body["rules"].is_array()) throw ApiError(400, "\"rules\" must be an array");
    const std::vector<nlohmann::json> records(body["rules"].begin(), body["rules"].end());
    auto v = validate(records, s->log->activities);
    if (auto* diags = std::get_if<std::vector<Diagnostic>>(&v)) {
      for (const auto& d : *diags) problems.push_back("rules: " + to_string(d));
    } else {
      for (const auto& r : std::get<std::vector<Rule>>(v)) add(r);
    }
  }
  if (!problems.empty()) throw ApiError(422, "invalid rule selection", problems);

  s->selected = std::move(chosen);
  s->conv.select(s->selected);
  impl_->persist_session(*s);
  return {{"selected", rules_to_json(s->selected)["constraints"]},
          {"warnings", drain_warnings(*s)}};
}

nlohmann::json Service::run_discovery(const std::string& session_id, const nlohmann::json& body) {
  const auto s = impl_->find_session(session_id);
  const auto busy = Impl::claim(*s);
  DiscoveryConfig config;
  if (body.is_object() && body.contains("sup")) {
    if (!body["sup"].is_number()) throw ApiError(400, "sup must be a number in [0, 1]");
    config.sup = body["sup"].get<double>();
  }
  if (!(config.sup >= 0.0 && config.sup <= 1.0)) {
    throw ApiError(400, "sup must be a number in [0, 1], got " + std::to_string(config.sup));
  }
  if (body.is_object() && body.contains("fallback")) {
    const auto f = body["fallback"].get<std::string>();
    if (f == "abort") config.fallback = FallbackPolicy::abort;
    else if (f != "warn") throw ApiError(400, "fallback must be \"warn\" or \"abort\"");
  }

  std::vector<Rule> rules;
  {
    std::lock_guard state(s->state);
    rules = s->selected;
  }
  DiscoveryResult result{ProcessTree::tau(), {}, {}};
  try {
    result = discover(s->log->log, rules, config);
  } catch (const DiscoveryError& e) {
    throw ApiError(422, e.what(), e.blocking_rules());
  }

  std::lock_guard state(s->state);
  s->model = result.tree;
  ++s->model_version;
  s->warnings.insert(s->warnings.end(), result.warnings.begin(), result.warnings.end());
  impl_->persist_session(*s);
  return {{"model_version", s->model_version},
          {"sup", config.sup},
          {"rules", rules_to_json(rules)["constraints"]},
          {"model",
           {{"text", to_text(result.tree)},
            {"json", to_json(result.tree)},
            {"dot", to_dot(result.tree)}}},
          {"warnings", drain_warnings(*s)}};
}

std::string Service::get_model(const std::string& session_id, std::string_view format) const {
  const auto s = impl_->find_session(session_id);
  std::optional<ProcessTree> model;
  {
    std::lock_guard state(s->state);
    model = s->model;
  }
  if (format != "text" && format != "json" && format != "dot") {
    throw ApiError(400, "unknown model format \"" + std::string(format) +
                            "\"; use text, json or dot");
  }
  if (!model) throw ApiError(404, "no model has been discovered in this session yet");
  if (format == "text") return to_text(*model);
  if (format == "json") return to_json(*model).dump(2);
  return to_dot(*model);
}

nlohmann::json Service::providers() const {
  nlohmann::json list = nlohmann::json::array();
  list.push_back({{"id", "scripted"}, {"models", nlohmann::json::array()}});
  for (const auto& p : known_providers()) {
    list.push_back({{"id", p.id},
                    {"endpoint", p.endpoint},
                    {"api_key_env", p.api_key_env},
                    {"models", p.models}});
  }
  return {{"providers", list}};
}

}  // namespace rgd
