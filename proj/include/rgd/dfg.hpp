#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "rgd/event_log.hpp"

namespace rgd {

// A directly-follows graph node: the artificial start, an activity, or the
// artificial end.
class DfgNode {
 public:
  enum class Kind { start, activity, end };

  static DfgNode start() { return DfgNode(Kind::start, std::nullopt); }
  static DfgNode end() { return DfgNode(Kind::end, std::nullopt); }
  static DfgNode of(Activity a) { return DfgNode(Kind::activity, std::move(a)); }

  Kind kind() const { return kind_; }
  bool is_marker() const { return kind_ != Kind::activity; }
  // Precondition: kind() == activity.
  const Activity& activity() const { return *activity_; }
  std::string label() const;

  friend bool operator==(const DfgNode&, const DfgNode&) = default;
  friend auto operator<=>(const DfgNode&, const DfgNode&) = default;

 private:
  DfgNode(Kind k, std::optional<Activity> a) : kind_(k), activity_(std::move(a)) {}

  Kind kind_;
  std::optional<Activity> activity_;
};

using DfgEdge = std::pair<DfgNode, DfgNode>;

class Dfg {
 public:
  const ActivitySet& activities() const { return activities_; }
  const std::map<DfgEdge, std::size_t>& edges() const { return edges_; }

  // Multiplicity of source -> target, 0 if absent.
  std::size_t edge(const DfgNode& source, const DfgNode& target) const;
  // Event count for an activity; start and end carry the trace count.
  std::size_t frequency(const DfgNode& node) const;
  std::size_t total_edges() const;

  friend bool operator==(const Dfg&, const Dfg&) = default;

 private:
  friend Dfg build_dfg(const EventLog& log, const ActivitySet& extra_nodes);

  ActivitySet activities_;
  std::map<DfgEdge, std::size_t> edges_;
  std::map<Activity, std::size_t> activity_freq_;
  std::size_t traces_ = 0;
};

Dfg build_dfg(const EventLog& log);

// Also registers `extra_nodes` as (possibly isolated) activity nodes.
Dfg build_dfg(const EventLog& log, const ActivitySet& extra_nodes);

// build_dfg of the log with every trace filtered to `subset`.
Dfg project(const EventLog& log, const ActivitySet& subset);

// Graphviz rendering; edge labels are multiplicities.
std::string to_dot(const Dfg& dfg);

}  // namespace rgd
