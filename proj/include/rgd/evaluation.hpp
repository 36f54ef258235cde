#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rgd/declare.hpp"
#include "rgd/llm.hpp"

namespace rgd {

enum class Granularity { s2s, par };

std::string_view granularity_name(Granularity g);  // "s2s", "par"
std::optional<Granularity> granularity_from_name(std::string_view name);

struct EvalCase {
  std::string id;
  std::string text;
  std::vector<Rule> ground_truth;
  Granularity granularity = Granularity::s2s;
  std::string group;  // paragraph this sentence belongs to; empty = own paragraph
};

struct CaseSet {
  ActivitySet activities;
  std::vector<EvalCase> cases;
};

// Fixture file:
//   {"activities": [...],
//    "cases": [{"id": "...", "text": "...", "group": "...",
//               "constraints": [{"template": ..., "activities": [...]}]}]}
// Ground-truth rules are validated against "activities"; SchemaError lists
// every problem.
CaseSet parse_cases(std::string_view json_text);

// Concatenates the sentences of each group (first-appearance order) into one
// paragraph case whose ground truth is the union of the sentence truths.
std::vector<EvalCase> make_paragraphs(const std::vector<EvalCase>& sentences);

struct CaseResult {
  std::string id;
  std::vector<Rule> extracted;
  std::size_t error_cycles = 0;
  bool failed = false;
  std::size_t hits = 0;  // |ground truth ∩ extracted|
  std::string note;      // "clarification", client error text, ...
};

struct EvalReport {
  Ratio recall;
  Ratio precision;
  Ratio error_rate;
  Ratio failure_rate;
  std::size_t hits = 0;
  std::size_t ground_truth_total = 0;
  std::size_t extracted_total = 0;
  std::vector<CaseResult> cases;
};

// Micro-averaged metrics; rule identity is template plus ordered labels and
// both sides are treated as sets. Any 0/0 ratio is 0. Throws
// PreconditionError when the per-case sequences are not aligned.
EvalReport score(const std::vector<EvalCase>& cases,
                 const std::vector<std::vector<Rule>>& extracted,
                 const std::vector<std::size_t>& error_cycles, const std::vector<bool>& failures);

struct SuiteOptions {
  PromptVariant variant = PromptVariant::few_shot;
  std::size_t max_attempts = Conversation::kDefaultMaxAttempts;
  std::size_t concurrency = 1;
};

// One fresh conversation per case. Client errors mark the case failed and the
// suite carries on. With concurrency > 1 the client is shared across worker
// threads.
EvalReport run_suite(const std::vector<EvalCase>& cases, const ActivitySet& activities,
                     LlmClient& client, const SuiteOptions& options = {});

nlohmann::json to_json(const EvalReport& report);

}  // namespace rgd
