#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rgd/declare.hpp"
#include "rgd/event_log.hpp"

namespace rgd {

enum class Role { domain_expert, assistant, service };

// "domain-expert", "assistant", "service"
std::string_view role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

struct Message {
  Role role;
  std::string text;

  friend bool operator==(const Message&, const Message&) = default;
};

// Which task description heads the prompt.
enum class PromptVariant {
  interactive,  // full text: clarification questions allowed, worked examples
  few_shot,     // no clarification instruction, examples kept
  zero_shot,    // no clarification instruction, no examples
};

std::string_view prompt_variant_name(PromptVariant v);
std::optional<PromptVariant> prompt_variant_from_name(std::string_view name);

// Task description text (the first prompt message) for a variant.
const std::string& task_description(PromptVariant variant);
inline constexpr std::string_view kTaskDescriptionVersion = "v1";

// Expert-assistant dialogue state. History only ever grows.
class Conversation {
 public:
  static constexpr std::size_t kDefaultMaxAttempts = 10;

  explicit Conversation(ActivitySet alphabet,
                        PromptVariant variant = PromptVariant::interactive,
                        std::size_t max_attempts = kDefaultMaxAttempts);

  const std::vector<Message>& history() const { return history_; }
  const ActivitySet& alphabet() const { return alphabet_; }
  PromptVariant variant() const { return variant_; }

  const std::vector<Rule>& selected_rules() const { return selected_; }
  void select(std::vector<Rule> rules) { selected_ = std::move(rules); }

  std::size_t max_attempts() const { return max_attempts_; }
  std::size_t attempts_remaining() const { return attempts_remaining_; }
  void reset_attempts() { attempts_remaining_ = max_attempts_; }
  void consume_attempt();

  // Appends the sent message and the assistant reply.
  void record_exchange(Message sent, std::string reply);

  // Restores a stored history (snapshots); replaces nothing already present.
  void restore(std::vector<Message> history);

 private:
  ActivitySet alphabet_;
  PromptVariant variant_;
  std::size_t max_attempts_;
  std::size_t attempts_remaining_;
  std::vector<Message> history_;
  std::vector<Rule> selected_;
};

// Prompt = <task description, activities report, [selected-rules report]>
//          + history + <new message>.
// The selected-rules report is present only when rules are selected.
// Throws PreconditionError for an empty alphabet or an assistant-role message.
std::vector<Message> build_prompt(const Conversation& conv, const Message& new_msg);

std::string activities_report(const ActivitySet& alphabet);
std::string rules_report(const std::vector<Rule>& rules);

// Maps a role-tagged message sequence to response text. Implementations
// used with concurrent evaluation must be thread-safe.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Throws LlmError on transport, credential or timeout failures.
  virtual std::string complete(std::span<const Message> prompt) = 0;
};

// Replays canned responses in order; thread-safe. Running out of responses
// is a non-retryable LlmError.
class ScriptedClient : public LlmClient {
 public:
  explicit ScriptedClient(std::vector<std::string> responses);

  // Transcript file: one JSON string literal per non-blank line.
  static std::vector<std::string> parse_transcript(std::string_view text);

  std::string complete(std::span<const Message> prompt) override;

  std::size_t invocations() const;
  std::vector<std::string> remaining() const;
  // Prompts seen so far, for assertions.
  std::vector<std::vector<Message>> prompts() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<std::vector<Message>> prompts_;
};

std::string invoke(LlmClient& client, std::span<const Message> prompt);

// build_prompt + invoke + history append. History is untouched when the
// client throws.
std::string exchange(Conversation& conv, LlmClient& client, const Message& new_msg);

struct Clarification {
  std::string text;
};
struct ExtractedRules {
  std::vector<nlohmann::json> candidates;  // raw constraint records
};
struct Invalid {
  std::vector<std::string> diagnostics;
};
using LlmOutcome = std::variant<Clarification, ExtractedRules, Invalid>;

// Classifies a response: a {"constraints": [...]} object (bare, fenced or
// surrounded by prose) is ExtractedRules; text that attempts JSON but does not
// yield a usable object is Invalid; other non-empty text is a Clarification;
// empty text is Invalid.
LlmOutcome parse_outcome(std::string_view response);

struct Diagnostic {
  std::optional<std::size_t> index;  // record position, if record-specific
  std::string reason;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

std::string to_string(const Diagnostic& d);

// Either every record is valid (rules, duplicates removed) or all problems
// found across all records.
using Validation = std::variant<std::vector<Rule>, std::vector<Diagnostic>>;

Validation validate(std::span<const nlohmann::json> candidates, const ActivitySet& alphabet);

// {"constraints": [...]} round trip.
nlohmann::json rules_to_json(const std::vector<Rule>& rules);
nlohmann::json rule_to_json(const Rule& rule);
// Parses and validates a rules document; throws SchemaError with all
// diagnostics joined when anything is wrong.
std::vector<Rule> rules_from_json(const nlohmann::json& doc, const ActivitySet& alphabet);

// Service-role message listing validation problems for the assistant.
std::string error_report(const std::vector<std::string>& problems);

struct RulesReady {
  std::vector<Rule> rules;
  std::vector<BatchEntry> stats;  // empty when no log was given
};
struct Failure {
  // One entry per failed attempt: the problems reported back to the LLM.
  std::vector<std::vector<std::string>> transcript;
};

struct CycleResult {
  std::variant<Clarification, RulesReady, Failure> outcome;
  std::size_t invocations = 0;
  std::size_t error_cycles = 0;  // invalid replies that were sent back
  std::size_t validation_attempts = 0;
};

// One expert turn: prompt, invoke, classify; invalid output is reported back
// to the LLM until a valid rule set arrives, a clarification is asked, or the
// attempt budget runs out. `new_msg` must come from the domain expert.
// LlmError propagates with the history holding every completed exchange.
CycleResult run_cycle(Conversation& conv, LlmClient& client, const Message& new_msg,
                      const EventLog* log = nullptr);

}  // namespace rgd
