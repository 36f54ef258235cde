#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rgd/event_log.hpp"

namespace rgd {

enum class Operator { sequence, exclusive_choice, concurrent, loop };

// "->", "X", "+", "*"
std::string_view operator_symbol(Operator op);
std::optional<Operator> operator_from_symbol(std::string_view symbol);

// Immutable binary process tree. Copies share structure.
//
// Leaves are activities or the silent step tau. For a loop node the left
// child is the body (executed first and last) and the right child the redo
// part.
class ProcessTree {
 public:
  enum class Kind { activity, tau, node };

  static ProcessTree leaf(Activity a);
  static ProcessTree tau();
  static ProcessTree node(Operator op, ProcessTree left, ProcessTree right);

  Kind kind() const;
  // Preconditions: kind() == activity / node respectively.
  const Activity& activity() const;
  Operator op() const;
  const ProcessTree& left() const;
  const ProcessTree& right() const;

  friend bool operator==(const ProcessTree& a, const ProcessTree& b);

 private:
  struct Data;
  explicit ProcessTree(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

// Activity leaves in left-to-right order (with repetitions, if any).
std::vector<Activity> leaves(const ProcessTree& tree);

// Nested text form: ->( 'a', X( tau, 'b' ) ). Quotes and backslashes in
// labels are backslash-escaped.
std::string to_text(const ProcessTree& tree);
// Throws ParseError (byte offset) on malformed text.
ProcessTree parse_tree_text(std::string_view text);

// {"op": "->", "children": [...]}, {"leaf": "a"}, {"leaf": null} for tau.
nlohmann::json to_json(const ProcessTree& tree);
ProcessTree tree_from_json(const nlohmann::json& j);

std::string to_dot(const ProcessTree& tree);

// Every trace of the tree's language with at most `max_len` events. Loops are
// unrolled only as far as the length bound allows.
std::set<Trace> tree_language_sample(const ProcessTree& tree, std::size_t max_len);

}  // namespace rgd
