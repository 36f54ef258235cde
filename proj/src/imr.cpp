#include "rgd/imr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

constexpr std::array kOperatorsInEnumerationOrder = {
    Operator::sequence, Operator::exclusive_choice, Operator::concurrent, Operator::loop};

// Cost ties go to the earliest operator here, then to enumeration order.
int tie_break_rank(Operator op) {
  switch (op) {
    case Operator::exclusive_choice:
      return 0;
    case Operator::sequence:
      return 1;
    case Operator::concurrent:
      return 2;
    case Operator::loop:
      return 3;
  }
  return 4;
}

bool is_ordered(Operator op) { return op == Operator::sequence || op == Operator::loop; }

enum class Side { first, second };

// Pruning table. `b` is empty for unary templates. Every entry marks a
// combination where each induced model has a violating trace; see the
// exhaustive tree-enumeration test for the machine check.
bool prunes(Template t, Operator op, Side a, std::optional<Side> b) {
  using enum Operator;
  const bool sep = b && *b != a;
  const bool a1 = a == Side::first;
  const bool a2 = a == Side::second;
  const bool b1 = b && *b == Side::first;
  const bool b2 = b && *b == Side::second;
  switch (t) {
    case Template::at_least1:
      return op == exclusive_choice || (op == loop && a2);
    case Template::at_most1:
      return op == loop;
    case Template::response:
      switch (op) {
        case sequence:
          return a2 && b1;
        case exclusive_choice:
        case concurrent:
          return sep;
        case loop:
          return a1 && b2;
      }
      break;
    case Template::precedence:
      switch (op) {
        case sequence:
        case loop:
          return b1 && a2;
        case exclusive_choice:
        case concurrent:
          return sep;
      }
      break;
    case Template::responded_existence:
      return (op == exclusive_choice && sep) || (op == loop && a1 && b2);
    case Template::co_existence:
      return (op == exclusive_choice || op == loop) && sep;
    case Template::not_co_existence:
      // A loop repeats its body and redo parts, so two iterations can pick
      // the branch with a and the branch with b even inside one side.
      return ((op == sequence || op == concurrent) && sep) || op == loop;
    case Template::not_succession:
      switch (op) {
        case sequence:
          return a1 && b2;
        case exclusive_choice:
          return false;
        case concurrent:
          return sep;
        case loop:
          return true;
      }
      break;
  }
  return false;
}

// Per-step dense view of a DFG: activities sorted and indexed, start at n,
// end at n + 1.
struct StepGraph {
  std::vector<Activity> acts;
  std::vector<std::vector<std::size_t>> edge;  // (n+2) x (n+2)
  std::vector<std::size_t> freq;               // per activity

  explicit StepGraph(const Dfg& dfg) : acts(dfg.activities().begin(), dfg.activities().end()) {
    const std::size_t n = acts.size();
    edge.assign(n + 2, std::vector<std::size_t>(n + 2, 0));
    freq.assign(n, 0);
    std::map<DfgNode, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
      index.emplace(DfgNode::of(acts[i]), i);
      freq[i] = dfg.frequency(DfgNode::of(acts[i]));
    }
    index.emplace(DfgNode::start(), n);
    index.emplace(DfgNode::end(), n + 1);
    for (const auto& [e, count] : dfg.edges()) {
      edge[index.at(e.first)][index.at(e.second)] = count;
    }
  }

  std::size_t size() const { return acts.size(); }
  std::size_t start() const { return acts.size(); }
  std::size_t end() const { return acts.size() + 1; }
};

struct MaskCut {
  Operator op;
  std::uint64_t sigma1;
};

std::uint64_t full_mask(std::size_t n) { return n >= 64 ? ~0ULL : (1ULL << n) - 1; }

std::vector<MaskCut> enumerate_masks(std::size_t n) {
  std::vector<MaskCut> out;
  const std::uint64_t full = full_mask(n);
  for (Operator op : kOperatorsInEnumerationOrder) {
    for (std::uint64_t m = 1; m < full; ++m) {
      if (!is_ordered(op) && (m & 1ULL) == 0) continue;
      out.push_back({op, m});
    }
  }
  return out;
}

CutCost mask_cost(const StepGraph& g, const MaskCut& cut) {
  const std::size_t n = g.size();
  const auto in1 = [&](std::size_t i) { return ((cut.sigma1 >> i) & 1ULL) != 0; };
  CutCost c;
  const auto missing_pair = [&](std::size_t x, std::size_t y) {
    if (g.edge[x][y] == 0) c.missing += static_cast<double>(std::min(g.freq[x], g.freq[y]));
  };
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (in1(x) == in1(y)) continue;
      const bool forward = in1(x);  // x in sigma1, y in sigma2
      switch (cut.op) {
        case Operator::sequence:
          if (!forward) c.deviation += static_cast<double>(g.edge[x][y]);
          else missing_pair(x, y);
          break;
        case Operator::exclusive_choice:
          c.deviation += static_cast<double>(g.edge[x][y]);
          break;
        case Operator::concurrent:
        case Operator::loop:
          missing_pair(x, y);
          break;
      }
    }
    if (cut.op == Operator::loop && !in1(x)) {
      c.deviation += static_cast<double>(g.edge[g.start()][x] + g.edge[x][g.end()]);
    }
  }
  return c;
}

Cut to_cut(const std::vector<Activity>& acts, const MaskCut& m) {
  Cut cut{m.op, {}, {}};
  for (std::size_t i = 0; i < acts.size(); ++i) {
    ((m.sigma1 >> i) & 1ULL ? cut.sigma1 : cut.sigma2).insert(acts[i]);
  }
  return cut;
}

Side side_of(const Cut& cut, const Activity& a, const Rule& rule) {
  if (cut.sigma1.contains(a)) return Side::first;
  if (cut.sigma2.contains(a)) return Side::second;
  throw PreconditionError("rule " + to_string(rule) + " mentions '" + a.label() +
                          "', which is outside the cut " + to_string(cut));
}

// A rule bound to activity indices of one step.
struct BoundRule {
  const Rule* rule;
  std::size_t a;
  std::optional<std::size_t> b;
};

bool mask_violates(const MaskCut& cut, const BoundRule& r) {
  const auto side = [&](std::size_t i) {
    return ((cut.sigma1 >> i) & 1ULL) ? Side::first : Side::second;
  };
  std::optional<Side> b;
  if (r.b) b = side(*r.b);
  return prunes(r.rule->kind(), cut.op, side(r.a), b);
}

std::vector<BoundRule> bind(const std::vector<Rule>& rules, const std::vector<Activity>& acts) {
  const auto index_of = [&](const Activity& a) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(acts.begin(), acts.end(), a);
    if (it == acts.end() || *it != a) return std::nullopt;
    return static_cast<std::size_t>(it - acts.begin());
  };
  std::vector<BoundRule> out;
  for (const auto& rule : rules) {
    const auto a = index_of(rule.first());
    if (!a) continue;
    BoundRule br{&rule, *a, std::nullopt};
    if (rule.activities().size() == 2) {
      const auto b = index_of(rule.second());
      if (!b) continue;
      br.b = b;
    }
    out.push_back(br);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string set_to_string(const ActivitySet& s) {
  std::vector<std::string> labels;
  for (const auto& a : s) labels.push_back(a.label());
  return "{" + join(labels, ", ") + "}";
}

bool cheaper(double cost, const MaskCut& cut, double best_cost, const MaskCut& best) {
  const double eps = 1e-9 * (1.0 + std::abs(best_cost));
  if (cost < best_cost - eps) return true;
  if (cost > best_cost + eps) return false;
  return tie_break_rank(cut.op) < tie_break_rank(best.op);
}

}  // namespace

std::string to_string(const Cut& cut) {
  return "(" + std::string(operator_symbol(cut.op)) + ", " + set_to_string(cut.sigma1) + ", " +
         set_to_string(cut.sigma2) + ")";
}

std::optional<ProcessTree> check_base_case(const EventLog& log) {
  const auto sigma = alphabet(log);
  if (sigma.empty()) return ProcessTree::tau();
  if (sigma.size() > 1) return std::nullopt;

  const Activity& a = *sigma.begin();
  bool repeated = false;
  bool has_empty = false;
  for (const auto& [trace, _] : log.variants()) {
    if (trace.empty()) has_empty = true;
    if (trace.size() >= 2) repeated = true;
  }
  auto tree = repeated ? ProcessTree::node(Operator::loop, ProcessTree::leaf(a), ProcessTree::tau())
                       : ProcessTree::leaf(a);
  if (has_empty) tree = ProcessTree::node(Operator::exclusive_choice, ProcessTree::tau(), tree);
  return tree;
}

std::vector<Cut> enumerate_cuts(const ActivitySet& sigma) {
  if (sigma.size() < 2) {
    throw PreconditionError("cut enumeration needs at least two activities, got " +
                            std::to_string(sigma.size()));
  }
  if (sigma.size() > 63) throw PreconditionError("alphabet too large for cut enumeration");
  const std::vector<Activity> acts(sigma.begin(), sigma.end());
  std::vector<Cut> out;
  for (const auto& m : enumerate_masks(acts.size())) out.push_back(to_cut(acts, m));
  return out;
}

bool violates(const Cut& cut, const Rule& rule) {
  const Side a = side_of(cut, rule.first(), rule);
  std::optional<Side> b;
  if (rule.activities().size() == 2) b = side_of(cut, rule.second(), rule);
  return prunes(rule.kind(), cut.op, a, b);
}

bool applicable(const Rule& rule, const ActivitySet& sigma) {
  return std::all_of(rule.activities().begin(), rule.activities().end(),
                     [&](const Activity& a) { return sigma.contains(a); });
}

std::vector<Cut> explore(const Dfg& dfg, const std::vector<Rule>& rules) {
  std::vector<Cut> out;
  for (auto& cut : enumerate_cuts(dfg.activities())) {
    const bool pruned = std::any_of(rules.begin(), rules.end(), [&](const Rule& r) {
      return applicable(r, dfg.activities()) && violates(cut, r);
    });
    if (!pruned) out.push_back(std::move(cut));
  }
  return out;
}

CutCost cut_cost_terms(const Dfg& dfg, const Cut& cut) {
  const StepGraph g(dfg);
  MaskCut m{cut.op, 0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (cut.sigma1.contains(g.acts[i])) {
      m.sigma1 |= 1ULL << i;
    } else if (!cut.sigma2.contains(g.acts[i])) {
      throw PreconditionError("cut " + to_string(cut) + " does not cover '" + g.acts[i].label() +
                              "'");
    }
  }
  return mask_cost(g, m);
}

double cut_cost(const Dfg& dfg, const Cut& cut, double sup) {
  return cut_cost_terms(dfg, cut).total(sup);
}

std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut) {
  EventLog first;
  EventLog second;
  switch (cut.op) {
    case Operator::sequence:
    case Operator::concurrent:
      return {filter(log, cut.sigma1), filter(log, cut.sigma2)};
    case Operator::exclusive_choice:
      // Whole trace goes to the side holding most of its events; ties (and
      // empty traces) go to sigma1. Minority events are dropped.
      for (const auto& [trace, count] : log.variants()) {
        const auto in1 = static_cast<std::size_t>(std::count_if(
            trace.begin(), trace.end(), [&](const Activity& a) { return cut.sigma1.contains(a); }));
        const auto in2 = static_cast<std::size_t>(std::count_if(
            trace.begin(), trace.end(), [&](const Activity& a) { return cut.sigma2.contains(a); }));
        const bool to_first = in1 >= in2;
        const ActivitySet& keep = to_first ? cut.sigma1 : cut.sigma2;
        Trace projected;
        for (const auto& a : trace) {
          if (keep.contains(a)) projected.push_back(a);
        }
        (to_first ? first : second).add(std::move(projected), count);
      }
      return {std::move(first), std::move(second)};
    case Operator::loop:
      // Each maximal run of sigma1 events is one body execution, each maximal
      // run of sigma2 events one redo execution.
      for (const auto& [trace, count] : log.variants()) {
        if (trace.empty()) {
          first.add({}, count);
          continue;
        }
        std::size_t i = 0;
        while (i < trace.size()) {
          const bool body = cut.sigma1.contains(trace[i]);
          Trace run;
          while (i < trace.size() && cut.sigma1.contains(trace[i]) == body) {
            if (body || cut.sigma2.contains(trace[i])) run.push_back(trace[i]);
            ++i;
          }
          (body ? first : second).add(std::move(run), count);
        }
      }
      return {std::move(first), std::move(second)};
  }
  return {};
}

namespace {

class Discoverer {
 public:
  Discoverer(const std::vector<Rule>& rules, const DiscoveryConfig& config, DiscoveryResult& out)
      : rules_(rules), config_(config), out_(out) {}

  // `sigma` is the activity set this call must cover; it can be larger than
  // the log's alphabet when an exclusive-choice split dropped every trace
  // carrying some activity.
  ProcessTree run(const EventLog& log, const ActivitySet& sigma) {
    if (sigma.size() <= 1) return base(log, sigma);
    return recurse(log, sigma);
  }

 private:
  ProcessTree base(const EventLog& log, const ActivitySet& sigma) {
    if (sigma.empty()) return ProcessTree::tau();
    const Activity& a = *sigma.begin();
    if (log.empty()) return ProcessTree::leaf(a);
    if (alphabet(log).empty()) {
      return ProcessTree::node(Operator::exclusive_choice, ProcessTree::tau(), ProcessTree::leaf(a));
    }
    return *check_base_case(log);
  }

  ProcessTree recurse(const EventLog& log, const ActivitySet& sigma) {
    if (sigma.size() > config_.max_alphabet) {
      throw PreconditionError("alphabet of " + std::to_string(sigma.size()) +
                              " activities exceeds the exhaustive cut-search limit of " +
                              std::to_string(config_.max_alphabet));
    }
    const Dfg dfg = build_dfg(log, sigma);
    const StepGraph g(dfg);
    const auto bound = bind(rules_, g.acts);
    const auto cuts = enumerate_masks(g.size());

    std::optional<std::size_t> best_admissible;
    std::optional<std::size_t> best_any;
    std::vector<double> costs(cuts.size());
    std::vector<bool> pruning(bound.size(), false);
    std::size_t admissible = 0;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      costs[i] = mask_cost(g, cuts[i]).total(config_.sup);
      bool pruned = false;
      for (std::size_t r = 0; r < bound.size(); ++r) {
        if (mask_violates(cuts[i], bound[r])) {
          pruned = true;
          pruning[r] = true;
        }
      }
      if (!best_any || cheaper(costs[i], cuts[i], costs[*best_any], cuts[*best_any])) {
        best_any = i;
      }
      if (!pruned) {
        ++admissible;
        if (!best_admissible ||
            cheaper(costs[i], cuts[i], costs[*best_admissible], cuts[*best_admissible])) {
          best_admissible = i;
        }
      }
    }

    DiscoveryStep step;
    step.sigma = sigma;
    step.candidates = cuts.size();
    step.admissible = admissible;
    step.unconstrained = to_cut(g.acts, cuts[*best_any]);
    for (std::size_t r = 0; r < bound.size(); ++r) {
      if (pruning[r]) step.pruning_rules.push_back(*bound[r].rule);
    }

    std::size_t chosen = 0;
    if (best_admissible) {
      chosen = *best_admissible;
    } else {
      std::vector<std::string> names;
      for (const auto& r : step.pruning_rules) names.push_back(to_string(r));
      if (config_.fallback == FallbackPolicy::abort) {
        throw DiscoveryError("no admissible cut over " + set_to_string(sigma) +
                                 "; every candidate violates at least one of: " +
                                 join(names, ", "),
                             names);
      }
      out_.warnings.push_back("no cut over " + set_to_string(sigma) +
                              " satisfies the selected rules; ignored at this step: " +
                              join(names, ", "));
      step.fallback = true;
      chosen = *best_any;
    }
    step.chosen = to_cut(g.acts, cuts[chosen]);
    step.cost = costs[chosen];

    const Cut cut = step.chosen;
    out_.steps.push_back(std::move(step));

    auto [left_log, right_log] = split_log(log, cut);
    auto left = run(left_log, cut.sigma1);
    auto right = run(right_log, cut.sigma2);
    return ProcessTree::node(cut.op, std::move(left), std::move(right));
  }

  const std::vector<Rule>& rules_;
  const DiscoveryConfig& config_;
  DiscoveryResult& out_;
};

}  // namespace

DiscoveryResult discover(const EventLog& log, const std::vector<Rule>& rules,
                         const DiscoveryConfig& config) {
  if (log.empty()) throw PreconditionError("discovery needs a non-empty log");
  if (!(config.sup >= 0.0 && config.sup <= 1.0)) {
    throw PreconditionError("sup must lie in [0, 1], got " + std::to_string(config.sup));
  }
  DiscoveryResult result{ProcessTree::tau(), {}, {}};
  Discoverer d(rules, config, result);
  result.tree = d.run(log, alphabet(log));
  return result;
}

}  // namespace rgd
