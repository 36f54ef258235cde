#include "rgd/llm.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rgd/errors.hpp"
#include "text_util.hpp"

namespace rgd {

namespace assets {
extern const char kTaskDescription[];
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::domain_expert:
      return "domain-expert";
    case Role::assistant:
      return "assistant";
    case Role::service:
      return "service";
  }
  return "?";
}

std::optional<Role> role_from_name(std::string_view name) {
  for (auto r : {Role::domain_expert, Role::assistant, Role::service}) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string_view prompt_variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::interactive:
      return "interactive";
    case PromptVariant::few_shot:
      return "few";
    case PromptVariant::zero_shot:
      return "zero";
  }
  return "?";
}

std::optional<PromptVariant> prompt_variant_from_name(std::string_view name) {
  if (name == "interactive") return PromptVariant::interactive;
  if (name == "few" || name == "few-shot") return PromptVariant::few_shot;
  if (name == "zero" || name == "zero-shot") return PromptVariant::zero_shot;
  return std::nullopt;
}

namespace {

// Drops marker lines and, depending on the variant, the blocks they delimit.
std::string assemble_task_description(PromptVariant variant) {
  const bool keep_clarification = variant == PromptVariant::interactive;
  const bool keep_examples = variant != PromptVariant::zero_shot;
  std::istringstream in(assets::kTaskDescription);
  std::string out;
  std::string line;
  std::string open_block;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.starts_with("<!-- begin:")) {
      open_block = std::string(t.substr(11, t.size() - 11 - 4));
      continue;
    }
    if (t.starts_with("<!-- end:")) {
      open_block.clear();
      continue;
    }
    if (open_block == "clarification" && !keep_clarification) continue;
    if (open_block == "examples" && !keep_examples) continue;
    out += line;
    out += '\n';
  }
  while (out.ends_with("\n\n")) out.pop_back();
  return out;
}

}  // namespace

const std::string& task_description(PromptVariant variant) {
  static const std::string interactive = assemble_task_description(PromptVariant::interactive);
  static const std::string few = assemble_task_description(PromptVariant::few_shot);
  static const std::string zero = assemble_task_description(PromptVariant::zero_shot);
  switch (variant) {
    case PromptVariant::few_shot:
      return few;
    case PromptVariant::zero_shot:
      return zero;
    case PromptVariant::interactive:
      break;
  }
  return interactive;
}

Conversation::Conversation(ActivitySet alphabet, PromptVariant variant, std::size_t max_attempts)
    : alphabet_(std::move(alphabet)),
      variant_(variant),
      max_attempts_(max_attempts),
      attempts_remaining_(max_attempts) {
  if (max_attempts == 0) throw PreconditionError("max_attempts must be at least 1");
}

void Conversation::consume_attempt() {
  if (attempts_remaining_ == 0) throw PreconditionError("no attempts remaining");
  --attempts_remaining_;
}

void Conversation::record_exchange(Message sent, std::string reply) {
  history_.push_back(std::move(sent));
  history_.push_back(Message{Role::assistant, std::move(reply)});
}

void Conversation::restore(std::vector<Message> history) {
  if (!history_.empty()) throw PreconditionError("conversation history already populated");
  history_ = std::move(history);
}

std::string activities_report(const ActivitySet& alphabet) {
  std::string out =
      "Activities recorded in the event log. Constraints may only use these labels, "
      "written exactly as listed:\n";
  for (const auto& a : alphabet) out += "- " + a.label() + "\n";
  out.pop_back();
  return out;
}

std::string rules_report(const std::vector<Rule>& rules) {
  return "Rules the user currently keeps selected (keep them in mind; return them again only if "
         "they are still wanted):\n" +
         rules_to_json(rules).dump();
}

std::vector<Message> build_prompt(const Conversation& conv, const Message& new_msg) {
  if (conv.alphabet().empty()) {
    throw PreconditionError("cannot build a prompt without activities; load an event log first");
  }
  if (new_msg.role == Role::assistant) {
    throw PreconditionError("new prompt messages come from the domain expert or a service");
  }
  std::vector<Message> prompt;
  prompt.reserve(conv.history().size() + 4);
  prompt.push_back({Role::service, task_description(conv.variant())});
  prompt.push_back({Role::service, activities_report(conv.alphabet())});
  if (!conv.selected_rules().empty()) {
    prompt.push_back({Role::service, rules_report(conv.selected_rules())});
  }
  prompt.insert(prompt.end(), conv.history().begin(), conv.history().end());
  prompt.push_back(new_msg);
  return prompt;
}

ScriptedClient::ScriptedClient(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::vector<std::string> ScriptedClient::parse_transcript(std::string_view text) {
  std::vector<std::string> responses;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_string()) throw ParseError("", ParseError::Unit::line, line_no);
      responses.push_back(j.get<std::string>());
    } catch (const std::exception&) {
      throw ParseError("transcript line " + std::to_string(line_no) +
                           " is not a JSON string literal",
                       ParseError::Unit::line, line_no);
    }
  }
  return responses;
}

std::string ScriptedClient::complete(std::span<const Message> prompt) {
  std::lock_guard lock(mu_);
  if (next_ >= responses_.size()) {
    throw LlmError("scripted client has no responses left", false);
  }
  prompts_.emplace_back(prompt.begin(), prompt.end());
  return responses_[next_++];
}

std::size_t ScriptedClient::invocations() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::vector<std::string> ScriptedClient::remaining() const {
  std::lock_guard lock(mu_);
  return {responses_.begin() + static_cast<std::ptrdiff_t>(next_), responses_.end()};
}

std::vector<std::vector<Message>> ScriptedClient::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

std::string invoke(LlmClient& client, std::span<const Message> prompt) {
  return client.complete(prompt);
}

std::string exchange(Conversation& conv, LlmClient& client, const Message& new_msg) {
  const auto prompt = build_prompt(conv, new_msg);
  auto reply = invoke(client, prompt);
  conv.record_exchange(new_msg, reply);
  return reply;
}

namespace {

// Position just past the '}' matching the '{' at `open`, honouring strings.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

std::optional<std::string_view> fenced_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return text.substr(body_start);
  return text.substr(body_start, close - body_start);
}

LlmOutcome classify(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("constraints")) {
    return Invalid{{"expected a JSON object with a \"constraints\" array"}};
  }
  const auto& c = j.at("constraints");
  if (!c.is_array()) return Invalid{{"\"constraints\" must be an array"}};
  return ExtractedRules{{c.begin(), c.end()}};
}

bool attempts_json(std::string_view t) {
  return t.starts_with('{') || t.starts_with('[') || t.starts_with("```") ||
         t.find("\"constraints\"") != std::string_view::npos ||
         t.find("\"template\"") != std::string_view::npos;
}

}  // namespace

LlmOutcome parse_outcome(std::string_view response) {
  const auto text = detail::trim(response);
  if (text.empty()) return Invalid{{"empty response"}};

  std::string first_error;
  const auto try_parse = [&](std::string_view candidate) -> std::optional<nlohmann::json> {
    try {
      return nlohmann::json::parse(candidate);
    } catch (const nlohmann::json::parse_error& e) {
      if (first_error.empty()) first_error = e.what();
      return std::nullopt;
    }
  };

  if (const auto fenced = fenced_block(text)) {
    if (auto j = try_parse(detail::trim(*fenced))) return classify(*j);
  }
  if (auto j = try_parse(text)) return classify(*j);

  // JSON embedded in prose: first balanced object carrying "constraints".
  for (std::size_t open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    const auto close = matching_brace(text, open);
    if (!close) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text.substr(open, *close - open));
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    if (j.is_object() && j.contains("constraints")) return classify(j);
  }

  if (attempts_json(text)) return Invalid{{"malformed JSON: " + first_error}};
  return Clarification{std::string(text)};
}

std::string to_string(const Diagnostic& d) {
  if (!d.index) return d.reason;
  return "constraint #" + std::to_string(*d.index) + ": " + d.reason;
}

Validation validate(std::span<const nlohmann::json> candidates, const ActivitySet& alphabet) {
  std::vector<Diagnostic> diags;
  std::vector<Rule> rules;
  std::set<Rule> seen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& rec = candidates[i];
    const auto problem = [&](std::string reason) { diags.push_back({i, std::move(reason)}); };
    if (!rec.is_object()) {
      problem("expected an object with \"template\" and \"activities\"");
      continue;
    }
    std::optional<Template> tmpl;
    if (!rec.contains("template") || !rec.at("template").is_string()) {
      problem("missing \"template\" name");
    } else {
      const auto name = rec.at("template").get<std::string>();
      tmpl = template_from_name(name);
      if (!tmpl) problem("unknown template \"" + name + "\"");
    }
    if (!rec.contains("activities") || !rec.at("activities").is_array()) {
      problem("missing \"activities\" array");
      continue;
    }
    const auto& acts = rec.at("activities");
    std::vector<Activity> activities;
    bool labels_ok = true;
    for (const auto& a : acts) {
      if (!a.is_string()) {
        problem("activity labels must be strings, got " + a.dump());
        labels_ok = false;
        continue;
      }
      const auto label = a.get<std::string>();
      try {
        Activity act(label);
        if (!alphabet.contains(act)) {
          problem("unknown activity \"" + label + "\" (not in the event log's activity list)");
          labels_ok = false;
        }
        activities.push_back(std::move(act));
      } catch (const SchemaError& e) {
        problem(std::string("invalid activity label: ") + e.what());
        labels_ok = false;
      }
    }
    if (!tmpl) continue;
    if (acts.size() != arity(*tmpl)) {
      problem(std::string(template_name(*tmpl)) + " expects " + std::to_string(arity(*tmpl)) +
              (arity(*tmpl) == 1 ? " activity" : " activities") + ", got " +
              std::to_string(acts.size()));
      continue;
    }
    if (activities.size() == 2 && activities[0] == activities[1]) {
      problem(std::string(template_name(*tmpl)) + " needs two different activities");
      continue;
    }
    if (!labels_ok) continue;
    Rule rule(*tmpl, std::move(activities));
    if (seen.insert(rule).second) rules.push_back(std::move(rule));
  }
  if (!diags.empty()) return diags;
  return rules;
}

nlohmann::json rule_to_json(const Rule& rule) {
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& a : rule.activities()) acts.push_back(a.label());
  return {{"template", std::string(template_name(rule.kind()))}, {"activities", acts}};
}

nlohmann::json rules_to_json(const std::vector<Rule>& rules) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : rules) list.push_back(rule_to_json(r));
  return {{"constraints", list}};
}

std::vector<Rule> rules_from_json(const nlohmann::json& doc, const ActivitySet& alphabet) {
  const auto outcome = classify(doc);
  if (const auto* inv = std::get_if<Invalid>(&outcome)) {
    throw SchemaError(inv->diagnostics.front(), "constraints");
  }
  const auto& records = std::get<ExtractedRules>(outcome).candidates;
  auto result = validate(records, alphabet);
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&result)) {
    std::string msg = "invalid rules:";
    for (const auto& d : *diags) msg += "\n  " + to_string(d);
    throw SchemaError(msg, "constraints");
  }
  return std::get<std::vector<Rule>>(std::move(result));
}

std::string error_report(const std::vector<std::string>& problems) {
  std::string out = "The previous reply could not be accepted. Problems found:\n";
  for (const auto& p : problems) out += "- " + p + "\n";
  out +=
      "Reply with the complete corrected JSON object only, using the supported templates and "
      "the listed activity labels.";
  return out;
}

CycleResult run_cycle(Conversation& conv, LlmClient& client, const Message& new_msg,
                      const EventLog* log) {
  if (new_msg.role != Role::domain_expert) {
    throw PreconditionError("a cycle starts with a domain-expert message");
  }
  conv.reset_attempts();
  CycleResult result{Failure{}};
  Failure failure;
  Message msg = new_msg;
  while (conv.attempts_remaining() > 0) {
    const auto reply = exchange(conv, client, msg);
    conv.consume_attempt();
    ++result.invocations;

    std::vector<std::string> problems;
    auto outcome = parse_outcome(reply);
    if (auto* c = std::get_if<Clarification>(&outcome)) {
      result.outcome = std::move(*c);
      return result;
    }
    if (auto* ex = std::get_if<ExtractedRules>(&outcome)) {
      ++result.validation_attempts;
      auto v = validate(ex->candidates, conv.alphabet());
      if (auto* rules = std::get_if<std::vector<Rule>>(&v)) {
        RulesReady ready{std::move(*rules), {}};
        if (log != nullptr) ready.stats = batch_stats(ready.rules, *log);
        result.outcome = std::move(ready);
        return result;
      }
      for (const auto& d : std::get<std::vector<Diagnostic>>(v)) problems.push_back(to_string(d));
    } else {
      problems = std::get<Invalid>(outcome).diagnostics;
    }
    ++result.error_cycles;
    failure.transcript.push_back(problems);
    msg = Message{Role::service, error_report(problems)};
  }
  result.outcome = std::move(failure);
  return result;
}

}  // namespace rgd
