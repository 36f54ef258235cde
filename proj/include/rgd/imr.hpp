#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rgd/declare.hpp"
#include "rgd/dfg.hpp"
#include "rgd/event_log.hpp"
#include "rgd/process_tree.hpp"

namespace rgd {

// Binary cut: operator plus a bipartition of the step's alphabet.
struct Cut {
  Operator op;
  ActivitySet sigma1;
  ActivitySet sigma2;

  friend bool operator==(const Cut&, const Cut&) = default;
};

// "(->, {a}, {b, c})"
std::string to_string(const Cut& cut);

// Leaf, loop or tau for logs over at most one activity; nullopt otherwise.
std::optional<ProcessTree> check_base_case(const EventLog& log);

// All cuts over `sigma` in a fixed order: operators ->, X, +, *; ordered
// bipartitions for -> and *, unordered ones for X and + (the smallest activity
// always in sigma1); within an operator, by ascending membership bitmask over
// the sorted activities. Throws PreconditionError when |sigma| < 2.
std::vector<Cut> enumerate_cuts(const ActivitySet& sigma);

// True when every process tree induced by the cut admits a trace violating
// the rule. Throws PreconditionError if a rule activity is outside the cut.
bool violates(const Cut& cut, const Rule& rule);

// A rule takes part in pruning only when all its activities are in `sigma`.
bool applicable(const Rule& rule, const ActivitySet& sigma);

// enumerate_cuts over the graph's activities minus cuts violating any
// applicable rule.
std::vector<Cut> explore(const Dfg& dfg, const std::vector<Rule>& rules);

struct CutCost {
  double deviation = 0;  // observed edges the operator forbids
  double missing = 0;    // expected edges never observed
  double total(double sup) const { return deviation + sup * missing; }
};

// Precondition: the cut partitions the graph's activities.
CutCost cut_cost_terms(const Dfg& dfg, const Cut& cut);
double cut_cost(const Dfg& dfg, const Cut& cut, double sup);

// Splits the log into the two sub-logs handed to the recursion.
std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut);

enum class FallbackPolicy { warn_and_ignore_rules, abort };

struct DiscoveryConfig {
  double sup = 0.2;
  FallbackPolicy fallback = FallbackPolicy::warn_and_ignore_rules;
  // Cut search is exhaustive; larger alphabets are refused.
  std::size_t max_alphabet = 16;
};

// One recursion step that searched for a cut.
struct DiscoveryStep {
  ActivitySet sigma;
  Cut chosen;
  double cost = 0;
  std::size_t candidates = 0;
  std::size_t admissible = 0;
  bool fallback = false;
  // Cheapest cut when rules are ignored; differs from `chosen` exactly when
  // rules changed the decision.
  Cut unconstrained;
  std::vector<Rule> pruning_rules;  // applicable rules that pruned at least one cut
};

struct DiscoveryResult {
  ProcessTree tree;
  std::vector<std::string> warnings;
  std::vector<DiscoveryStep> steps;
};

// Throws PreconditionError on an empty log, invalid sup or oversized alphabet,
// and DiscoveryError when every cut is pruned under FallbackPolicy::abort.
DiscoveryResult discover(const EventLog& log, const std::vector<Rule>& rules,
                         const DiscoveryConfig& config = {});

}  // namespace rgd
