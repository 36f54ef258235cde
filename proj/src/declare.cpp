#include "rgd/declare.hpp"

#include <algorithm>
#include <cstdio>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

struct TemplateInfo {
  Template t;
  std::string_view name;
  std::size_t arity;
};

constexpr std::array<TemplateInfo, 8> kTemplateInfo{{
    {Template::at_most1, "AtMost1", 1},
    {Template::at_least1, "AtLeast1", 1},
    {Template::response, "Response", 2},
    {Template::precedence, "Precedence", 2},
    {Template::responded_existence, "RespondedExistence", 2},
    {Template::co_existence, "CoExistence", 2},
    {Template::not_co_existence, "NotCoExistence", 2},
    {Template::not_succession, "NotSuccession", 2},
}};

const TemplateInfo& info(Template t) { return kTemplateInfo[static_cast<std::size_t>(t)]; }

}  // namespace

std::string_view template_name(Template t) { return info(t).name; }

std::optional<Template> template_from_name(std::string_view name) {
  for (const auto& i : kTemplateInfo) {
    if (i.name == name) return i.t;
  }
  return std::nullopt;
}

std::size_t arity(Template t) { return info(t).arity; }

Rule::Rule(Template t, std::vector<Activity> activities)
    : template_(t), activities_(std::move(activities)) {
  if (activities_.size() != arity(t)) {
    throw PreconditionError(std::string(template_name(t)) + " takes " +
                            std::to_string(arity(t)) + " activities, got " +
                            std::to_string(activities_.size()));
  }
  if (activities_.size() == 2 && activities_[0] == activities_[1]) {
    throw PreconditionError(std::string(template_name(t)) + " needs two distinct activities");
  }
}

Rule Rule::unary(Template t, Activity a) { return Rule(t, {std::move(a)}); }

Rule Rule::binary(Template t, Activity a, Activity b) {
  return Rule(t, {std::move(a), std::move(b)});
}

std::string to_string(const Rule& rule) {
  std::string out(template_name(rule.kind()));
  out += "(";
  for (std::size_t i = 0; i < rule.activities().size(); ++i) {
    if (i) out += ", ";
    out += rule.activities()[i].label();
  }
  return out + ")";
}

TraceCheck evaluate_trace(const Rule& rule, const Trace& trace) {
  const Activity& a = rule.first();
  const auto count_a = std::count(trace.begin(), trace.end(), a);

  switch (rule.kind()) {
    case Template::at_most1:
      return {count_a >= 1, count_a >= 2};
    case Template::at_least1:
      return {true, count_a == 0};
    default:
      break;
  }

  const Activity& b = rule.second();
  const auto count_b = std::count(trace.begin(), trace.end(), b);
  switch (rule.kind()) {
    case Template::response: {
      // Violated iff the last a has no b after it.
      const auto last_a = std::find(trace.rbegin(), trace.rend(), a);
      const bool violated =
          last_a != trace.rend() && std::find(trace.rbegin(), last_a, b) == last_a;
      return {count_a > 0, violated};
    }
    case Template::precedence: {
      // Violated iff the first b comes before any a.
      const auto first_b = std::find(trace.begin(), trace.end(), b);
      const bool violated =
          first_b != trace.end() && std::find(trace.begin(), first_b, a) == first_b;
      return {count_b > 0, violated};
    }
    case Template::responded_existence:
      return {count_a > 0, count_a > 0 && count_b == 0};
    case Template::co_existence:
      return {count_a > 0 || count_b > 0, (count_a > 0) != (count_b > 0)};
    case Template::not_co_existence:
      return {count_a > 0 || count_b > 0, count_a > 0 && count_b > 0};
    case Template::not_succession: {
      const auto first_a = std::find(trace.begin(), trace.end(), a);
      const bool violated = first_a != trace.end() && std::find(first_a, trace.end(), b) != trace.end();
      return {count_a > 0, violated};
    }
    default:
      break;
  }
  return {};
}

RuleStats stats(const Rule& rule, const EventLog& log) {
  if (log.empty()) {
    throw PreconditionError("statistics are undefined for an empty log (" + to_string(rule) + ")");
  }
  RuleStats s{rule, 0, 0, 0, Ratio(0), Ratio(0)};
  for (const auto& [trace, count] : log.variants()) {
    const auto check = evaluate_trace(rule, trace);
    if (check.activated) {
      s.activated += count;
      if (!check.violated) s.satisfied += count;
    }
  }
  s.traces = log.trace_count();
  const auto sat = static_cast<std::int64_t>(s.satisfied);
  s.support = Ratio(sat, static_cast<std::int64_t>(s.traces));
  s.confidence = Ratio(sat, static_cast<std::int64_t>(std::max<std::size_t>(1, s.activated)));
  return s;
}

std::vector<BatchEntry> batch_stats(const std::vector<Rule>& rules, const EventLog& log) {
  std::vector<BatchEntry> out;
  out.reserve(rules.size());
  for (const auto& rule : rules) {
    try {
      out.push_back({stats(rule, log), {}});
    } catch (const Error& e) {
      out.push_back({std::nullopt, e.what()});
    }
  }
  return out;
}

std::string format_ratio(const Ratio& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f",
                static_cast<double>(r.numerator()) / static_cast<double>(r.denominator()));
  return buf;
}

}  // namespace rgd
