#include "rgd/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <thread>

#include "rgd/errors.hpp"

namespace rgd {

std::string_view granularity_name(Granularity g) {
  return g == Granularity::s2s ? "s2s" : "par";
}

std::optional<Granularity> granularity_from_name(std::string_view name) {
  if (name == "s2s" || name == "S2S") return Granularity::s2s;
  if (name == "par" || name == "PAR") return Granularity::par;
  return std::nullopt;
}

CaseSet parse_cases(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("case file is not valid JSON: ") + e.what(),
                     ParseError::Unit::byte_offset, e.byte);
  }
  if (!doc.is_object() || !doc.contains("activities") || !doc["activities"].is_array()) {
    throw SchemaError("case file needs an \"activities\" array", "activities");
  }
  if (!doc.contains("cases") || !doc["cases"].is_array()) {
    throw SchemaError("case file needs a \"cases\" array", "cases");
  }
  CaseSet set;
  for (const auto& a : doc["activities"]) {
    if (!a.is_string()) throw SchemaError("activity labels must be strings", "activities");
    set.activities.insert(Activity(a.get<std::string>()));
  }
  std::size_t index = 0;
  for (const auto& c : doc["cases"]) {
    const std::string where = "cases[" + std::to_string(index) + "]";
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) {
      throw SchemaError(where + " needs a \"text\" string", where + ".text");
    }
    EvalCase ec;
    ec.id = c.value("id", "case-" + std::to_string(index + 1));
    ec.text = c["text"].get<std::string>();
    ec.group = c.value("group", std::string());
    try {
      ec.ground_truth = rules_from_json({{"constraints", c.value("constraints", nlohmann::json::array())}},
                                        set.activities);
    } catch (const SchemaError& e) {
      throw SchemaError(where + ": " + e.what(), where + ".constraints");
    }
    set.cases.push_back(std::move(ec));
    ++index;
  }
  return set;
}

std::vector<EvalCase> make_paragraphs(const std::vector<EvalCase>& sentences) {
  std::vector<EvalCase> out;
  std::map<std::string, std::size_t> by_group;
  for (const auto& s : sentences) {
    const std::string key = s.group.empty() ? "\x1f" + s.id : s.group;
    auto [it, fresh] = by_group.try_emplace(key, out.size());
    if (fresh) {
      out.push_back({s.group.empty() ? s.id : s.group, s.text, {}, Granularity::par, s.group});
    } else {
      out[it->second].text += " " + s.text;
    }
    auto& truth = out[it->second].ground_truth;
    for (const auto& r : s.ground_truth) {
      if (std::find(truth.begin(), truth.end(), r) == truth.end()) truth.push_back(r);
    }
  }
  return out;
}

namespace {

Ratio ratio_or_zero(std::size_t num, std::size_t den) {
  if (den == 0) return Ratio(0);
  return Ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

EvalReport score(const std::vector<EvalCase>& cases,
                 const std::vector<std::vector<Rule>>& extracted,
                 const std::vector<std::size_t>& error_cycles, const std::vector<bool>& failures) {
  const auto n = cases.size();
  if (extracted.size() != n || error_cycles.size() != n || failures.size() != n) {
    throw PreconditionError("score needs one extracted set, error count and failure flag per case");
  }
  EvalReport report;
  std::size_t with_errors = 0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::set<Rule> truth(cases[i].ground_truth.begin(), cases[i].ground_truth.end());
    const std::set<Rule> got(extracted[i].begin(), extracted[i].end());
    CaseResult cr;
    cr.id = cases[i].id;
    cr.extracted.assign(got.begin(), got.end());
    cr.error_cycles = error_cycles[i];
    cr.failed = failures[i];
    cr.hits = static_cast<std::size_t>(
        std::count_if(got.begin(), got.end(), [&](const Rule& r) { return truth.contains(r); }));
    report.hits += cr.hits;
    report.ground_truth_total += truth.size();
    report.extracted_total += got.size();
    if (cr.error_cycles > 0) ++with_errors;
    if (cr.failed) ++failed;
    report.cases.push_back(std::move(cr));
  }
  report.recall = ratio_or_zero(report.hits, report.ground_truth_total);
  report.precision = ratio_or_zero(report.hits, report.extracted_total);
  report.error_rate = ratio_or_zero(with_errors, n);
  report.failure_rate = ratio_or_zero(failed, n);
  return report;
}

namespace {

CaseResult run_case(const EvalCase& c, const ActivitySet& activities, LlmClient& client,
                    const SuiteOptions& options) {
  CaseResult r;
  r.id = c.id;
  Conversation conv(activities, options.variant, options.max_attempts);
  try {
    const auto cycle = run_cycle(conv, client, {Role::domain_expert, c.text});
    r.error_cycles = cycle.error_cycles;
    if (const auto* ready = std::get_if<RulesReady>(&cycle.outcome)) {
      r.extracted = ready->rules;
    } else if (std::holds_alternative<Clarification>(cycle.outcome)) {
      r.note = "clarification";
    } else {
      r.failed = true;
      r.note = "attempts exhausted";
    }
  } catch (const Error& e) {
    r.failed = true;
    r.note = e.what();
    // Every service message in the history reported an invalid reply.
    r.error_cycles = static_cast<std::size_t>(
        std::count_if(conv.history().begin(), conv.history().end(),
                      [](const Message& m) { return m.role == Role::service; }));
  }
  return r;
}

}  // namespace

EvalReport run_suite(const std::vector<EvalCase>& cases, const ActivitySet& activities,
                     LlmClient& client, const SuiteOptions& options) {
  std::vector<CaseResult> results(cases.size());
  const std::size_t workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(cases.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      results[i] = run_case(cases[i], activities, client, options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (auto i = next++; i < cases.size(); i = next++) {
          results[i] = run_case(cases[i], activities, client, options);
        }
      });
    }
  }

  std::vector<std::vector<Rule>> extracted;
  std::vector<std::size_t> errors;
  std::vector<bool> failures;
  for (const auto& r : results) {
    extracted.push_back(r.extracted);
    errors.push_back(r.error_cycles);
    failures.push_back(r.failed);
  }
  auto report = score(cases, extracted, errors, failures);
  for (std::size_t i = 0; i < results.size(); ++i) report.cases[i].note = results[i].note;
  return report;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) {
  return {{"value", boost::rational_cast<double>(r)},
          {"fraction", std::to_string(r.numerator()) + "/" + std::to_string(r.denominator())}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : report.cases) {
    nlohmann::json jc = {{"id", c.id},
                         {"extracted", rules_to_json(c.extracted)["constraints"]},
                         {"hits", c.hits},
                         {"error_cycles", c.error_cycles},
                         {"failed", c.failed}};
    if (!c.note.empty()) jc["note"] = c.note;
    cases.push_back(std::move(jc));
  }
  return {{"recall", ratio_json(report.recall)},
          {"precision", ratio_json(report.precision)},
          {"error_rate", ratio_json(report.error_rate)},
          {"failure_rate", ratio_json(report.failure_rate)},
          {"hits", report.hits},
          {"ground_truth_total", report.ground_truth_total},
          {"extracted_total", report.extracted_total},
          {"cases", std::move(cases)}};
}

}  // namespace rgd
