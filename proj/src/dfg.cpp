#include "rgd/dfg.hpp"

#include "dot_util.hpp"

namespace rgd {

std::string DfgNode::label() const {
  switch (kind_) {
    case Kind::start:
      return std::string(kStartMarker);
    case Kind::end:
      return std::string(kEndMarker);
    case Kind::activity:
      break;
  }
  return activity_->label();
}

std::size_t Dfg::edge(const DfgNode& source, const DfgNode& target) const {
  const auto it = edges_.find({source, target});
  return it == edges_.end() ? 0 : it->second;
}

std::size_t Dfg::frequency(const DfgNode& node) const {
  if (node.is_marker()) return traces_;
  const auto it = activity_freq_.find(node.activity());
  return it == activity_freq_.end() ? 0 : it->second;
}

std::size_t Dfg::total_edges() const {
  std::size_t n = 0;
  for (const auto& [_, count] : edges_) n += count;
  return n;
}

Dfg build_dfg(const EventLog& log) { return build_dfg(log, {}); }

Dfg build_dfg(const EventLog& log, const ActivitySet& extra_nodes) {
  Dfg g;
  g.activities_ = extra_nodes;
  g.traces_ = log.trace_count();
  for (const auto& [trace, count] : log.variants()) {
    DfgNode prev = DfgNode::start();
    for (const auto& a : trace) {
      g.activities_.insert(a);
      g.activity_freq_[a] += count;
      DfgNode next = DfgNode::of(a);
      g.edges_[{prev, next}] += count;
      prev = std::move(next);
    }
    g.edges_[{prev, DfgNode::end()}] += count;
  }
  return g;
}

Dfg project(const EventLog& log, const ActivitySet& subset) {
  return build_dfg(filter(log, subset));
}

std::string to_dot(const Dfg& dfg) {
  std::string out = "digraph dfg {\n  rankdir=LR;\n";
  out += "  n_start [label=" + detail::dot_quote(std::string(kStartMarker)) +
         ", shape=circle];\n";
  out += "  n_end [label=" + detail::dot_quote(std::string(kEndMarker)) + ", shape=doublecircle];\n";
  std::map<DfgNode, std::string> ids{{DfgNode::start(), "n_start"}, {DfgNode::end(), "n_end"}};
  std::size_t next = 0;
  for (const auto& a : dfg.activities()) {
    const auto id = "n" + std::to_string(next++);
    ids.emplace(DfgNode::of(a), id);
    out += "  " + id + " [label=" +
           detail::dot_quote(a.label() + " (" + std::to_string(dfg.frequency(DfgNode::of(a))) + ")") +
           ", shape=box];\n";
  }
  for (const auto& [edge, count] : dfg.edges()) {
    out += "  " + ids.at(edge.first) + " -> " + ids.at(edge.second) +
           " [label=\"" + std::to_string(count) + "\"];\n";
  }
  return out + "}\n";
}

}  // namespace rgd
