#include "rgd/event_log.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>

#include "rgd/errors.hpp"
#include "text_util.hpp"
#include "xml_reader.hpp"

namespace rgd {

Activity::Activity(std::string_view label) : label_(detail::trim(label)) {
  if (label_.empty()) throw SchemaError("activity label is empty", "activity");
  if (label_.find(kStartMarker) != std::string::npos ||
      label_.find(kEndMarker) != std::string::npos) {
    throw SchemaError("activity label '" + label_ + "' contains a reserved marker", "activity");
  }
}

void EventLog::add(Trace trace, std::size_t count) {
  if (count == 0) return;
  variants_[std::move(trace)] += count;
  trace_count_ += count;
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& [trace, count] : variants_) n += trace.size() * count;
  return n;
}

ActivitySet alphabet(const EventLog& log) {
  ActivitySet out;
  for (const auto& [trace, _] : log.variants()) out.insert(trace.begin(), trace.end());
  return out;
}

EventLog filter(const EventLog& log, const ActivitySet& keep) {
  EventLog out;
  for (const auto& [trace, count] : log.variants()) {
    Trace projected;
    for (const auto& a : trace) {
      if (keep.contains(a)) projected.push_back(a);
    }
    out.add(std::move(projected), count);
  }
  return out;
}

namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (detail::trim(header[i]) == name) return i;
  }
  return header.size();
}

struct PendingEvent {
  std::optional<std::int64_t> timestamp;
  std::size_t order;
  Activity activity;
};

}  // namespace

EventLog parse_csv(std::string_view content, const CsvConfig& config) {
  const auto records = detail::read_csv_records(content, config.delimiter);
  if (records.size() <= 1) throw EmptyLogError();

  const auto& header = records.front().fields;
  const std::size_t case_col = column_index(header, config.case_column);
  if (case_col == header.size()) {
    throw SchemaError("missing case column '" + config.case_column + "'", config.case_column);
  }
  const std::size_t act_col = column_index(header, config.activity_column);
  if (act_col == header.size()) {
    throw SchemaError("missing activity column '" + config.activity_column + "'",
                      config.activity_column);
  }
  std::optional<std::size_t> ts_col;
  if (!config.timestamp_column.empty()) {
    const std::size_t idx = column_index(header, config.timestamp_column);
    if (idx < header.size()) {
      ts_col = idx;
    } else if (config.require_timestamp) {
      throw SchemaError("missing timestamp column '" + config.timestamp_column + "'",
                        config.timestamp_column);
    }
  }

  // Cases keep first-appearance order so the result does not depend on hashing.
  std::vector<std::string> case_order;
  std::unordered_map<std::string, std::vector<PendingEvent>> cases;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto row_error = [&](const std::string& msg) {
      return ParseError("line " + std::to_string(rec.line) + ": " + msg, ParseError::Unit::line,
                        rec.line);
    };
    const std::size_t needed = std::max({case_col, act_col, ts_col.value_or(0)}) + 1;
    if (rec.fields.size() < needed) throw row_error("row has too few columns");

    const std::string case_id(detail::trim(rec.fields[case_col]));
    if (case_id.empty()) throw row_error("empty case identifier");
    std::optional<Activity> activity;
    try {
      activity.emplace(rec.fields[act_col]);
    } catch (const SchemaError& e) {
      throw row_error(e.what());
    }
    std::optional<std::int64_t> ts;
    if (ts_col) {
      ts = detail::parse_iso8601(rec.fields[*ts_col]);
      if (!ts) throw row_error("unparsable timestamp '" + rec.fields[*ts_col] + "'");
    }
    auto [it, inserted] = cases.try_emplace(case_id);
    if (inserted) case_order.push_back(case_id);
    it->second.push_back(PendingEvent{ts, r, std::move(*activity)});
  }

  EventLog log;
  for (const auto& id : case_order) {
    auto& events = cases[id];
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
      return a.timestamp < b.timestamp;
    });
    Trace trace;
    trace.reserve(events.size());
    for (auto& e : events) trace.push_back(std::move(e.activity));
    log.add(std::move(trace));
  }
  return log;
}

XesResult parse_xes(std::string_view content) {
  const auto root = detail::parse_xml(content);
  if (root->name != "log") {
    throw ParseError("XES root element must be <log>, found <" + root->name + ">",
                     ParseError::Unit::byte_offset, 0);
  }
  XesResult result;
  for (const auto& trace_el : root->children) {
    if (trace_el->name != "trace") continue;
    Trace trace;
    for (const auto& event_el : trace_el->children) {
      if (event_el->name != "event") continue;
      const std::string* label = nullptr;
      for (const auto& attr : event_el->children) {
        const auto* key = attr->attribute("key");
        if (attr->name == "string" && key && *key == "concept:name") {
          label = attr->attribute("value");
          break;
        }
      }
      if (label == nullptr || detail::trim(*label).empty()) {
        ++result.skipped_events;
        continue;
      }
      trace.emplace_back(*label);
    }
    result.log.add(std::move(trace));
  }
  if (result.log.empty()) throw EmptyLogError();
  return result;
}

std::string to_csv(const EventLog& log, const CsvConfig& config) {
  const char d = config.delimiter;
  std::string out = detail::csv_escape(config.case_column, d) + d +
                    detail::csv_escape(config.activity_column, d) + '\n';
  std::size_t case_id = 0;
  for (const auto& [trace, count] : log.variants()) {
    for (std::size_t k = 0; k < count; ++k) {
      ++case_id;
      // An empty trace has no event row and would vanish; callers needing
      // empty traces should use XES.
      for (const auto& a : trace) {
        out += std::to_string(case_id);
        out += d;
        out += detail::csv_escape(a.label(), d);
        out += '\n';
      }
    }
  }
  return out;
}

std::string to_string(const Trace& trace) {
  std::string out = "<";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += ",";
    out += trace[i].label();
  }
  return out + ">";
}

}  // namespace rgd
