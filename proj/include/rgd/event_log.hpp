#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rgd {

// Markers reserved for the artificial start/end nodes of a directly-follows
// graph. Activity labels may not contain either.
inline constexpr std::string_view kStartMarker = "▷";  // ▷
inline constexpr std::string_view kEndMarker = "□";    // □

// An activity label. Identity is exact, case-sensitive equality of the
// whitespace-trimmed label.
class Activity {
 public:
  // Throws SchemaError when the trimmed label is empty or contains a marker.
  explicit Activity(std::string_view label);

  const std::string& label() const { return label_; }

  friend bool operator==(const Activity&, const Activity&) = default;
  friend auto operator<=>(const Activity&, const Activity&) = default;

 private:
  std::string label_;
};

using Trace = std::vector<Activity>;
using ActivitySet = std::set<Activity>;

// Multiset of traces. Traces are kept as distinct variants with their
// multiplicity, so equality is multiset equality.
class EventLog {
 public:
  EventLog() = default;

  void add(Trace trace, std::size_t count = 1);

  const std::map<Trace, std::size_t>& variants() const { return variants_; }

  std::size_t trace_count() const { return trace_count_; }
  std::size_t event_count() const;
  bool empty() const { return trace_count_ == 0; }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  std::map<Trace, std::size_t> variants_;
  std::size_t trace_count_ = 0;
};

// Exactly the activities occurring in at least one trace.
ActivitySet alphabet(const EventLog& log);

// Keep only events whose activity is in `keep`. Trace multiplicities are
// preserved; traces may become empty.
EventLog filter(const EventLog& log, const ActivitySet& keep);

// Column mapping for tabular input.
struct CsvConfig {
  std::string case_column = "case:concept:name";
  std::string activity_column = "concept:name";
  std::string timestamp_column = "time:timestamp";
  // When false a missing timestamp column falls back to file order.
  bool require_timestamp = false;
  char delimiter = ',';
};

EventLog parse_csv(std::string_view content, const CsvConfig& config = {});

struct XesResult {
  EventLog log;
  std::size_t skipped_events = 0;  // events without a concept:name
};

XesResult parse_xes(std::string_view content);

// Writes one row per event, case ids numbered from 1, no timestamps.
std::string to_csv(const EventLog& log, const CsvConfig& config = {});

// "<a,b,c>" rendering used in diagnostics and test output.
std::string to_string(const Trace& trace);

}  // namespace rgd
