#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rgd/declare.hpp"
#include "rgd/event_log.hpp"
#include "rgd/imr.hpp"
#include "rgd/process_tree.hpp"

namespace rgd_test {

using namespace rgd;

std::string data_path(std::string_view name);
std::string read_data(std::string_view name);

Activity act(std::string_view label);
Trace trace(std::initializer_list<std::string_view> labels);
ActivitySet acts(std::initializer_list<std::string_view> labels);

// Builds a log from (trace, multiplicity) pairs.
struct Variant {
  std::vector<std::string_view> labels;
  std::size_t count = 1;
};
EventLog make_log(std::initializer_list<Variant> variants);

// The five-case claim log (L1), written out by hand.
EventLog l1();

// Random log over activities "a", "b", ... with fixed-seed generators.
EventLog random_log(std::mt19937_64& rng, std::size_t n_activities, std::size_t n_traces,
                    std::size_t max_len, bool allow_empty = false);

Rule random_rule(std::mt19937_64& rng, const std::vector<Activity>& pool);

// Models a cut can induce: the root operator over every sub-model of each
// side. A one-activity side yields the leaf and every operator over the leaf
// and tau in both orders; a two-activity side yields every operator over the
// two leaves in both orders.
std::vector<ProcessTree> side_models(const ActivitySet& side);
std::vector<ProcessTree> induced_models(const Cut& cut);

// Brute-force reading of cut violation: every induced model has a trace of
// length <= max_len that violates the rule.
bool oracle_violates(const Cut& cut, const Rule& rule, std::size_t max_len = 8);

// Tiny DOT reader covering the subset our exporters emit: a digraph with
// node statements, edge statements and bracketed attribute lists.
struct DotSummary {
  bool ok = false;
  std::string error;
  std::string graph_name;
  std::size_t nodes = 0;  // node statements, excluding the "node" default
  std::size_t edges = 0;
};
DotSummary parse_dot(std::string_view text);

}  // namespace rgd_test
