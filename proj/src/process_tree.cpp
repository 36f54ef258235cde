#include "rgd/process_tree.hpp"

#include <functional>
#include <variant>

#include "dot_util.hpp"
#include "rgd/errors.hpp"

namespace rgd {

std::string_view operator_symbol(Operator op) {
  switch (op) {
    case Operator::sequence:
      return "->";
    case Operator::exclusive_choice:
      return "X";
    case Operator::concurrent:
      return "+";
    case Operator::loop:
      return "*";
  }
  return "?";
}

std::optional<Operator> operator_from_symbol(std::string_view symbol) {
  for (auto op : {Operator::sequence, Operator::exclusive_choice, Operator::concurrent,
                  Operator::loop}) {
    if (operator_symbol(op) == symbol) return op;
  }
  return std::nullopt;
}

struct ProcessTree::Data {
  struct Tau {};
  struct Node {
    Operator op;
    ProcessTree left;
    ProcessTree right;
  };
  std::variant<Activity, Tau, Node> value;
};

ProcessTree ProcessTree::leaf(Activity a) {
  return ProcessTree(std::make_shared<const Data>(Data{std::move(a)}));
}

ProcessTree ProcessTree::tau() {
  static const auto shared = std::make_shared<const Data>(Data{Data::Tau{}});
  return ProcessTree(shared);
}

ProcessTree ProcessTree::node(Operator op, ProcessTree left, ProcessTree right) {
  return ProcessTree(
      std::make_shared<const Data>(Data{Data::Node{op, std::move(left), std::move(right)}}));
}

ProcessTree::Kind ProcessTree::kind() const {
  switch (data_->value.index()) {
    case 0:
      return Kind::activity;
    case 1:
      return Kind::tau;
    default:
      return Kind::node;
  }
}

const Activity& ProcessTree::activity() const { return std::get<Activity>(data_->value); }
Operator ProcessTree::op() const { return std::get<Data::Node>(data_->value).op; }
const ProcessTree& ProcessTree::left() const { return std::get<Data::Node>(data_->value).left; }
const ProcessTree& ProcessTree::right() const { return std::get<Data::Node>(data_->value).right; }

bool operator==(const ProcessTree& a, const ProcessTree& b) {
  if (a.data_ == b.data_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ProcessTree::Kind::activity:
      return a.activity() == b.activity();
    case ProcessTree::Kind::tau:
      return true;
    case ProcessTree::Kind::node:
      return a.op() == b.op() && a.left() == b.left() && a.right() == b.right();
  }
  return false;
}

std::vector<Activity> leaves(const ProcessTree& tree) {
  std::vector<Activity> out;
  std::function<void(const ProcessTree&)> walk = [&](const ProcessTree& t) {
    switch (t.kind()) {
      case ProcessTree::Kind::activity:
        out.push_back(t.activity());
        break;
      case ProcessTree::Kind::tau:
        break;
      case ProcessTree::Kind::node:
        walk(t.left());
        walk(t.right());
        break;
    }
  };
  walk(tree);
  return out;
}

namespace {

void append_text(const ProcessTree& t, std::string& out) {
  switch (t.kind()) {
    case ProcessTree::Kind::activity:
      out.push_back('\'');
      for (char c : t.activity().label()) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('\'');
      return;
    case ProcessTree::Kind::tau:
      out += "tau";
      return;
    case ProcessTree::Kind::node:
      out += operator_symbol(t.op());
      out += "( ";
      append_text(t.left(), out);
      out += ", ";
      append_text(t.right(), out);
      out += " )";
      return;
  }
}

class TextParser {
 public:
  explicit TextParser(std::string_view s) : s_(s) {}

  ProcessTree parse() {
    auto tree = term();
    skip_space();
    if (pos_ != s_.size()) fail("trailing characters");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("process tree text, byte " + std::to_string(pos_) + ": " + msg,
                     ParseError::Unit::byte_offset, pos_);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\t' ||
                                s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  ProcessTree term() {
    skip_space();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (s_[pos_] == '\'') return quoted_leaf();
    if (s_.substr(pos_).starts_with("tau")) {
      pos_ += 3;
      return ProcessTree::tau();
    }
    std::optional<Operator> op;
    for (std::string_view sym : {"->", "X", "+", "*"}) {
      if (s_.substr(pos_).starts_with(sym)) {
        op = operator_from_symbol(sym);
        pos_ += sym.size();
        break;
      }
    }
    if (!op) fail("expected an operator, 'label' or tau");
    expect('(');
    auto left = term();
    expect(',');
    auto right = term();
    expect(')');
    return ProcessTree::node(*op, std::move(left), std::move(right));
  }

  ProcessTree quoted_leaf() {
    ++pos_;
    std::string label;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated label");
      char c = s_[pos_++];
      if (c == '\'') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        c = s_[pos_++];
      }
      label.push_back(c);
    }
    try {
      return ProcessTree::leaf(Activity(label));
    } catch (const SchemaError& e) {
      fail(e.what());
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_text(const ProcessTree& tree) {
  std::string out;
  append_text(tree, out);
  return out;
}

ProcessTree parse_tree_text(std::string_view text) { return TextParser(text).parse(); }

nlohmann::json to_json(const ProcessTree& tree) {
  switch (tree.kind()) {
    case ProcessTree::Kind::activity:
      return {{"leaf", tree.activity().label()}};
    case ProcessTree::Kind::tau:
      return {{"leaf", nullptr}};
    case ProcessTree::Kind::node:
      break;
  }
  return {{"op", std::string(operator_symbol(tree.op()))},
          {"children", nlohmann::json::array({to_json(tree.left()), to_json(tree.right())})}};
}

ProcessTree tree_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("process tree node must be an object", "tree");
  if (j.contains("leaf")) {
    const auto& leaf = j.at("leaf");
    if (leaf.is_null()) return ProcessTree::tau();
    if (!leaf.is_string()) throw SchemaError("leaf must be a string or null", "leaf");
    return ProcessTree::leaf(Activity(leaf.get<std::string>()));
  }
  if (!j.contains("op") || !j.at("op").is_string()) {
    throw SchemaError("process tree node needs 'op' or 'leaf'", "op");
  }
  const auto op = operator_from_symbol(j.at("op").get<std::string>());
  if (!op) throw SchemaError("unknown operator " + j.at("op").dump(), "op");
  const auto& children = j.value("children", nlohmann::json::array());
  if (!children.is_array() || children.size() != 2) {
    throw SchemaError("operator node needs exactly two children", "children");
  }
  return ProcessTree::node(*op, tree_from_json(children[0]), tree_from_json(children[1]));
}

std::string to_dot(const ProcessTree& tree) {
  std::string out = "digraph process_tree {\n  node [fontname=\"Helvetica\"];\n";
  std::size_t next = 0;
  std::function<std::string(const ProcessTree&)> emit = [&](const ProcessTree& t) {
    const auto id = "t" + std::to_string(next++);
    switch (t.kind()) {
      case ProcessTree::Kind::activity:
        out += "  " + id + " [label=" + detail::dot_quote(t.activity().label()) + ", shape=box];\n";
        break;
      case ProcessTree::Kind::tau:
        out += "  " + id + " [label=\"tau\", shape=box, style=filled, fillcolor=black, fontcolor=white];\n";
        break;
      case ProcessTree::Kind::node: {
        out += "  " + id + " [label=" + detail::dot_quote(operator_symbol(t.op())) +
               ", shape=circle];\n";
        const auto l = emit(t.left());
        const auto r = emit(t.right());
        out += "  " + id + " -> " + l + ";\n";
        out += "  " + id + " -> " + r + ";\n";
        break;
      }
    }
    return id;
  };
  emit(tree);
  return out + "}\n";
}

namespace {

using Language = std::set<Trace>;

Language concat(const Language& a, const Language& b, std::size_t max_len) {
  Language out;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x.size() + y.size() > max_len) continue;
      Trace t = x;
      t.insert(t.end(), y.begin(), y.end());
      out.insert(std::move(t));
    }
  }
  return out;
}

void interleave(const Trace& x, std::size_t i, const Trace& y, std::size_t j, Trace& prefix,
                Language& out) {
  if (i == x.size() && j == y.size()) {
    out.insert(prefix);
    return;
  }
  if (i < x.size()) {
    prefix.push_back(x[i]);
    interleave(x, i + 1, y, j, prefix, out);
    prefix.pop_back();
  }
  if (j < y.size()) {
    prefix.push_back(y[j]);
    interleave(x, i, y, j + 1, prefix, out);
    prefix.pop_back();
  }
}

Language sample(const ProcessTree& t, std::size_t max_len) {
  switch (t.kind()) {
    case ProcessTree::Kind::activity:
      if (max_len == 0) return {};
      return {Trace{t.activity()}};
    case ProcessTree::Kind::tau:
      return {Trace{}};
    case ProcessTree::Kind::node:
      break;
  }
  const auto left = sample(t.left(), max_len);
  const auto right = sample(t.right(), max_len);
  switch (t.op()) {
    case Operator::sequence:
      return concat(left, right, max_len);
    case Operator::exclusive_choice: {
      Language out = left;
      out.insert(right.begin(), right.end());
      return out;
    }
    case Operator::concurrent: {
      Language out;
      Trace prefix;
      for (const auto& x : left) {
        for (const auto& y : right) {
          if (x.size() + y.size() <= max_len) interleave(x, 0, y, 0, prefix, out);
        }
      }
      return out;
    }
    case Operator::loop: {
      // body (redo body)*
      Language out = left;
      Language frontier = left;
      const Language redo_body = concat(right, left, max_len);
      while (!frontier.empty()) {
        Language next;
        for (auto& t2 : concat(frontier, redo_body, max_len)) {
          if (!out.contains(t2)) next.insert(t2);
        }
        out.insert(next.begin(), next.end());
        frontier = std::move(next);
      }
      return out;
    }
  }
  return {};
}

}  // namespace

std::set<Trace> tree_language_sample(const ProcessTree& tree, std::size_t max_len) {
  return sample(tree, max_len);
}

}  // namespace rgd
