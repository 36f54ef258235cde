#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "rgd/event_log.hpp"

namespace rgd {

enum class Template {
  at_most1,
  at_least1,
  response,
  precedence,
  responded_existence,
  co_existence,
  not_co_existence,
  not_succession,
};

inline constexpr std::array kAllTemplates = {
    Template::at_most1,         Template::at_least1,           Template::response,
    Template::precedence,       Template::responded_existence, Template::co_existence,
    Template::not_co_existence, Template::not_succession,
};

// Interchange names: "AtMost1", "Response", ...
std::string_view template_name(Template t);
std::optional<Template> template_from_name(std::string_view name);
std::size_t arity(Template t);

// A template instantiated over concrete activities. Binary rules must name
// two distinct activities.
class Rule {
 public:
  // Throws PreconditionError on arity mismatch or a repeated activity.
  Rule(Template t, std::vector<Activity> activities);

  static Rule unary(Template t, Activity a);
  static Rule binary(Template t, Activity a, Activity b);

  Template kind() const { return template_; }
  const std::vector<Activity>& activities() const { return activities_; }
  const Activity& first() const { return activities_[0]; }
  const Activity& second() const { return activities_.at(1); }

  friend bool operator==(const Rule&, const Rule&) = default;
  friend auto operator<=>(const Rule&, const Rule&) = default;

 private:
  Template template_;
  std::vector<Activity> activities_;
};

// "Response(A-created, Hist-checked)"
std::string to_string(const Rule& rule);

struct TraceCheck {
  bool activated = false;
  bool violated = false;

  friend bool operator==(const TraceCheck&, const TraceCheck&) = default;
};

TraceCheck evaluate_trace(const Rule& rule, const Trace& trace);

using Ratio = boost::rational<std::int64_t>;

struct RuleStats {
  Rule rule;
  std::size_t activated = 0;
  std::size_t satisfied = 0;  // activated and not violated
  std::size_t traces = 0;
  Ratio support;
  Ratio confidence;
};

// Throws PreconditionError on an empty log.
RuleStats stats(const Rule& rule, const EventLog& log);

struct BatchEntry {
  std::optional<RuleStats> stats;
  std::string error;  // set when stats is empty
};

std::vector<BatchEntry> batch_stats(const std::vector<Rule>& rules, const EventLog& log);

// Fixed four-decimal rendering, e.g. "0.6667".
std::string format_ratio(const Ratio& r);

}  // namespace rgd
