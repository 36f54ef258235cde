#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <random>

#include "rgd/errors.hpp"
#include "rgd/imr.hpp"
#include "support.hpp"

using namespace rgd;
using namespace rgd_test;

namespace {

ProcessTree leaf(std::string_view a) { return ProcessTree::leaf(Activity(a)); }

Cut cut(Operator op, ActivitySet s1, ActivitySet s2) { return {op, std::move(s1), std::move(s2)}; }

bool contains(const std::vector<Cut>& cuts, const Cut& c) {
  return std::find(cuts.begin(), cuts.end(), c) != cuts.end();
}

const ActivitySet kL1Others = {Activity("Doc-checked"), Activity("Hist-checked"),
                               Activity("A-rejected"), Activity("A-accepted"),
                               Activity("A-canceled")};

// Cost recomputed from the traces themselves, without the Dfg type.
CutCost trace_side_cost(const EventLog& log, const Cut& c) {
  std::map<std::pair<std::string, std::string>, std::size_t> df;
  std::map<std::string, std::size_t> freq;
  const std::string start = "<start>";
  const std::string end = "<end>";
  for (const auto& [t, n] : log.variants()) {
    std::string prev = start;
    for (const auto& a : t) {
      df[{prev, a.label()}] += n;
      freq[a.label()] += n;
      prev = a.label();
    }
    df[{prev, end}] += n;
  }
  const auto in1 = [&](const std::string& x) { return c.sigma1.contains(Activity(x)); };
  const auto in2 = [&](const std::string& x) { return c.sigma2.contains(Activity(x)); };
  CutCost cost;
  for (const auto& [e, n] : df) {
    const auto& [x, y] = e;
    switch (c.op) {
      case Operator::sequence:
        if (in2(x) && in1(y)) cost.deviation += n;
        break;
      case Operator::exclusive_choice:
        if ((in1(x) && in2(y)) || (in2(x) && in1(y))) cost.deviation += n;
        break;
      case Operator::concurrent:
        break;
      case Operator::loop:
        if ((x == start && in2(y)) || (in2(x) && y == end)) cost.deviation += n;
        break;
    }
  }
  const auto missing = [&](const Activity& x, const Activity& y) {
    if (!df.contains({x.label(), y.label()})) {
      cost.missing += std::min(freq[x.label()], freq[y.label()]);
    }
  };
  for (const auto& x : c.sigma1) {
    for (const auto& y : c.sigma2) {
      if (c.op == Operator::exclusive_choice) continue;
      missing(x, y);
      if (c.op != Operator::sequence) missing(y, x);
    }
  }
  return cost;
}

}  // namespace

// --- base cases -------------------------------------------------------------

TEST(CheckBaseCase, Examples) {
  EXPECT_EQ(check_base_case(make_log({{{"a"}, 3}})), leaf("a"));
  EXPECT_EQ(check_base_case(make_log({{{"a"}}, {{"a", "a"}}})),
            ProcessTree::node(Operator::loop, leaf("a"), ProcessTree::tau()));
  EXPECT_EQ(check_base_case(make_log({{{}}, {{"a"}}})),
            ProcessTree::node(Operator::exclusive_choice, ProcessTree::tau(), leaf("a")));
  EXPECT_FALSE(check_base_case(make_log({{{"a", "b"}}})));
  EXPECT_EQ(check_base_case(make_log({{{}}})), ProcessTree::tau());
}

TEST(CheckBaseCase, SkippableLoop) {
  EXPECT_EQ(check_base_case(make_log({{{}}, {{"a", "a"}}})),
            ProcessTree::node(Operator::exclusive_choice, ProcessTree::tau(),
                              ProcessTree::node(Operator::loop, leaf("a"), ProcessTree::tau())));
}

// --- enumeration ------------------------------------------------------------

TEST(EnumerateCuts, TwoActivitiesInOrder) {
  const auto a = acts({"a"});
  const auto b = acts({"b"});
  const std::vector<Cut> expected = {
      cut(Operator::sequence, a, b),         cut(Operator::sequence, b, a),
      cut(Operator::exclusive_choice, a, b), cut(Operator::concurrent, a, b),
      cut(Operator::loop, a, b),             cut(Operator::loop, b, a),
  };
  EXPECT_EQ(enumerate_cuts(acts({"a", "b"})), expected);
}

TEST(EnumerateCuts, ThreeActivitiesGive18) {
  const auto cuts = enumerate_cuts(acts({"a", "b", "c"}));
  EXPECT_EQ(cuts.size(), 18u);
  const auto count = [&](Operator op) {
    return std::count_if(cuts.begin(), cuts.end(), [&](const Cut& c) { return c.op == op; });
  };
  EXPECT_EQ(count(Operator::sequence), 6);
  EXPECT_EQ(count(Operator::loop), 6);
  EXPECT_EQ(count(Operator::exclusive_choice), 3);
  EXPECT_EQ(count(Operator::concurrent), 3);
}

TEST(EnumerateCuts, SingletonIsAnError) {
  EXPECT_THROW(enumerate_cuts(acts({"a"})), PreconditionError);
  EXPECT_THROW(enumerate_cuts({}), PreconditionError);
}

TEST(EnumerateCuts, PartitionsAreTotalAndCanonical) {
  for (std::size_t n = 2; n <= 6; ++n) {
    ActivitySet sigma;
    for (std::size_t i = 0; i < n; ++i) sigma.emplace(std::string(1, char('a' + i)));
    const auto cuts = enumerate_cuts(sigma);
    const std::size_t bip = (std::size_t{1} << n) - 2;  // ordered bipartitions
    EXPECT_EQ(cuts.size(), 2 * bip + bip);
    for (const auto& c : cuts) {
      ASSERT_FALSE(c.sigma1.empty());
      ASSERT_FALSE(c.sigma2.empty());
      ActivitySet all = c.sigma1;
      for (const auto& a : c.sigma2) EXPECT_TRUE(all.insert(a).second);
      EXPECT_EQ(all, sigma);
      if (c.op == Operator::exclusive_choice || c.op == Operator::concurrent) {
        EXPECT_TRUE(c.sigma1.contains(*sigma.begin()));
      }
    }
    EXPECT_EQ(enumerate_cuts(sigma), cuts);  // deterministic
  }
}

// --- violation ----------------------------------------------------------------

TEST(Violates, WorkedSequenceCut) {
  const auto c = cut(Operator::sequence, acts({"A-created", "Doc-checked"}),
                     acts({"Hist-checked", "A-accepted", "A-rejected", "A-canceled"}));
  EXPECT_TRUE(violates(c, Rule::binary(Template::not_succession, act("Doc-checked"),
                                       act("Hist-checked"))));
}

TEST(Violates, Examples) {
  EXPECT_FALSE(violates(cut(Operator::exclusive_choice, acts({"a"}), acts({"b"})),
                        Rule::binary(Template::not_co_existence, act("a"), act("b"))));
  EXPECT_TRUE(violates(cut(Operator::loop, acts({"a"}), acts({"b"})),
                       Rule::unary(Template::at_most1, act("a"))));
}

TEST(Violates, RuleOutsideCutIsAnError) {
  EXPECT_THROW(violates(cut(Operator::sequence, acts({"a"}), acts({"b"})),
                        Rule::unary(Template::at_most1, act("z"))),
               PreconditionError);
}

TEST(Violates, AgreesWithBruteForceOnSmallAlphabets) {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
  for (const auto& sigma : {acts({"a", "b"}), acts({"a", "b", "c"})}) {
    const std::vector<Activity> pool(sigma.begin(), sigma.end());
    std::vector<Rule> rules;
    for (auto t : kAllTemplates) {
      for (const auto& x : pool) {
        if (arity(t) == 1) {
          rules.push_back(Rule::unary(t, x));
          continue;
        }
        for (const auto& y : pool) {
          if (x != y) rules.push_back(Rule::binary(t, x, y));
        }
      }
    }
    for (const auto& c : enumerate_cuts(sigma)) {
      for (const auto& r : rules) {
        ++checked;
        const bool table = violates(c, r);
        const bool brute = oracle_violates(c, r);
        if (table != brute) {
          mismatches.push_back(to_string(c) + " " + to_string(r) + ": table " +
                               (table ? "prunes" : "keeps") + ", brute force " +
                               (brute ? "prunes" : "keeps"));
        }
      }
    }
  }
  EXPECT_GT(checked, 0u);
  EXPECT_TRUE(mismatches.empty()) << [&] {
    std::string s;
    for (const auto& m : mismatches) s += m + "\n";
    return s;
  }();
}

// --- explore ------------------------------------------------------------------

TEST(Explore, WorkedSequenceCutIsPrunedOnlyWithTheRule) {
  const auto g = build_dfg(l1());
  const auto c = cut(Operator::sequence, acts({"A-created", "Doc-checked"}),
                     acts({"Hist-checked", "A-accepted", "A-rejected", "A-canceled"}));
  const auto r2 =
      Rule::binary(Template::not_succession, act("Doc-checked"), act("Hist-checked"));
  EXPECT_TRUE(contains(explore(g, {}), c));
  EXPECT_FALSE(contains(explore(g, {r2}), c));
}

TEST(Explore, NotCoExistenceKeepsOnlyChoice) {
  const auto g = build_dfg(make_log({{{"a"}}, {{"b"}}}));
  const auto left = explore(g, {Rule::binary(Template::not_co_existence, act("a"), act("b"))});
  EXPECT_EQ(left, (std::vector<Cut>{cut(Operator::exclusive_choice, acts({"a"}), acts({"b"}))}));
}

TEST(Explore, NoRulesKeepsEverything) {
  const auto g = build_dfg(l1());
  EXPECT_EQ(explore(g, {}), enumerate_cuts(g.activities()));
}

TEST(Explore, ConflictingRulesPruneAll) {
  const auto g = build_dfg(make_log({{{"a", "b"}}}));
  EXPECT_TRUE(explore(g, {Rule::unary(Template::at_least1, act("a")),
                          Rule::unary(Template::at_most1, act("a")),
                          Rule::binary(Template::not_co_existence, act("a"), act("b"))})
                  .empty());
}

TEST(Explore, InapplicableRulesAreIgnored) {
  const auto g = build_dfg(make_log({{{"a", "b"}}}));
  EXPECT_EQ(explore(g, {Rule::unary(Template::at_most1, act("zz"))}),
            enumerate_cuts(acts({"a", "b"})));
}

// --- cost ---------------------------------------------------------------------

TEST(CutCost, L1SequenceAfterCreatedIsFree) {
  const auto g = build_dfg(l1());
  EXPECT_EQ(cut_cost(g, cut(Operator::sequence, acts({"A-created"}), kL1Others), 0.0), 0.0);
}

TEST(CutCost, L1ChoiceCountsCrossingEdges) {
  const auto g = build_dfg(l1());
  EXPECT_EQ(cut_cost(g, cut(Operator::exclusive_choice, acts({"A-created"}), kL1Others), 0.0),
            4.0);
}

TEST(CutCost, MatchesTraceSideComputation) {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 60; ++i) {
    const auto log = random_log(rng, 2 + i % 3, 2 + i % 6, 6, i % 4 == 0);
    const auto g = build_dfg(log);
    if (g.activities().size() < 2) continue;
    for (const auto& c : enumerate_cuts(g.activities())) {
      const auto got = cut_cost_terms(g, c);
      const auto want = trace_side_cost(log, c);
      ASSERT_EQ(got.deviation, want.deviation) << to_string(c);
      ASSERT_EQ(got.missing, want.missing) << to_string(c);
    }
  }
}

TEST(CutCost, SupZeroIsDeviationOnlyAndCostGrowsWithSup) {
  const auto g = build_dfg(l1());
  for (const auto& c : enumerate_cuts(g.activities())) {
    const auto terms = cut_cost_terms(g, c);
    EXPECT_EQ(cut_cost(g, c, 0.0), terms.deviation) << to_string(c);
    double prev = cut_cost(g, c, 0.0);
    for (int k = 1; k <= 20; ++k) {
      const double now = cut_cost(g, c, k / 20.0);
      EXPECT_GE(now, prev) << to_string(c);
      prev = now;
    }
  }
}

// --- split ----------------------------------------------------------------------

TEST(SplitLog, ChoiceUsesMajorityWithTiesToFirst) {
  const auto [first, second] =
      split_log(l1(), cut(Operator::exclusive_choice, acts({"A-canceled"}),
                acts({"A-created", "Doc-checked", "Hist-checked", "A-accepted", "A-rejected"})));
  EXPECT_EQ(first, make_log({{{"A-canceled"}, 3}}));
  EXPECT_EQ(second, make_log({{{"A-created", "Doc-checked", "Hist-checked", "A-rejected"}},
                              {{"A-created", "Hist-checked", "Doc-checked", "A-accepted"}}}));
}

TEST(SplitLog, ConcurrentProjection) {
  const auto [first, second] =
      split_log(make_log({{{"a", "a"}}, {{"a"}}}), cut(Operator::concurrent, acts({"a"}), acts({"b"})));
  EXPECT_EQ(first, make_log({{{"a", "a"}}, {{"a"}}}));
  EXPECT_EQ(second, make_log({{{}, 2}}));
}

TEST(SplitLog, LoopSegmentsMaximalRuns) {
  const auto [body, redo] =
      split_log(make_log({{{"a", "b", "a"}}}), cut(Operator::loop, acts({"a"}), acts({"b"})));
  EXPECT_EQ(body, make_log({{{"a"}, 2}}));
  EXPECT_EQ(redo, make_log({{{"b"}}}));
}

TEST(SplitLog, SequenceAndLoopKeepEveryEvent) {
  std::mt19937_64 rng(59);
  for (int i = 0; i < 80; ++i) {
    const auto log = random_log(rng, 3, 5, 6);
    const auto sigma = alphabet(log);
    if (sigma.size() < 2) continue;
    for (const auto& c : enumerate_cuts(sigma)) {
      if (c.op == Operator::exclusive_choice) continue;
      const auto [l, r] = split_log(log, c);
      EXPECT_EQ(l.event_count() + r.event_count(), log.event_count()) << to_string(c);
      for (const auto& a : alphabet(l)) EXPECT_TRUE(c.sigma1.contains(a));
      for (const auto& a : alphabet(r)) EXPECT_TRUE(c.sigma2.contains(a));
    }
  }
}
