#include "support.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rgd_test {

std::string data_path(std::string_view name) {
  return std::string(RGD_TEST_DATA_DIR) + "/" + std::string(name);
}

std::string read_data(std::string_view name) {
  std::ifstream in(data_path(name), std::ios::binary);
  if (!in) throw std::runtime_error("missing test data " + std::string(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Activity act(std::string_view label) { return Activity(label); }

Trace trace(std::initializer_list<std::string_view> labels) {
  Trace t;
  for (auto l : labels) t.emplace_back(l);
  return t;
}

ActivitySet acts(std::initializer_list<std::string_view> labels) {
  ActivitySet s;
  for (auto l : labels) s.emplace(l);
  return s;
}

EventLog make_log(std::initializer_list<Variant> variants) {
  EventLog log;
  for (const auto& v : variants) {
    Trace t;
    for (auto l : v.labels) t.emplace_back(l);
    log.add(std::move(t), v.count);
  }
  return log;
}

EventLog l1() {
  return make_log({
      {{"A-created", "Doc-checked", "Hist-checked", "A-rejected"}},
      {{"A-created", "Hist-checked", "Doc-checked", "A-accepted"}},
      {{"A-created", "A-canceled"}, 2},
      {{"A-canceled"}},
  });
}

EventLog random_log(std::mt19937_64& rng, std::size_t n_activities, std::size_t n_traces,
                    std::size_t max_len, bool allow_empty) {
  std::uniform_int_distribution<std::size_t> pick(0, n_activities - 1);
  std::uniform_int_distribution<std::size_t> len(allow_empty ? 0 : 1, max_len);
  EventLog log;
  for (std::size_t i = 0; i < n_traces; ++i) {
    Trace t;
    const auto n = len(rng);
    for (std::size_t j = 0; j < n; ++j) {
      t.emplace_back(std::string(1, static_cast<char>('a' + pick(rng))));
    }
    log.add(std::move(t));
  }
  return log;
}

Rule random_rule(std::mt19937_64& rng, const std::vector<Activity>& pool) {
  std::uniform_int_distribution<std::size_t> tpl(0, kAllTemplates.size() - 1);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const Template t = kAllTemplates[tpl(rng)];
  if (arity(t) == 1) return Rule::unary(t, pool[pick(rng)]);
  if (pool.size() < 2) return Rule::unary(Template::at_least1, pool[0]);
  const auto a = pick(rng);
  auto b = pick(rng);
  while (b == a) b = pick(rng);
  return Rule::binary(t, pool[a], pool[b]);
}

namespace {

constexpr Operator kOps[] = {Operator::sequence, Operator::exclusive_choice, Operator::concurrent,
                             Operator::loop};

}  // namespace

std::vector<ProcessTree> side_models(const ActivitySet& side) {
  std::vector<ProcessTree> out;
  const std::vector<Activity> v(side.begin(), side.end());
  if (v.size() == 1) {
    const auto x = ProcessTree::leaf(v[0]);
    out.push_back(x);
    for (auto op : kOps) {
      out.push_back(ProcessTree::node(op, x, ProcessTree::tau()));
      out.push_back(ProcessTree::node(op, ProcessTree::tau(), x));
    }
  } else if (v.size() == 2) {
    const auto x = ProcessTree::leaf(v[0]);
    const auto y = ProcessTree::leaf(v[1]);
    for (auto op : kOps) {
      out.push_back(ProcessTree::node(op, x, y));
      out.push_back(ProcessTree::node(op, y, x));
    }
  } else {
    throw std::invalid_argument("side_models handles sides of one or two activities");
  }
  return out;
}

std::vector<ProcessTree> induced_models(const Cut& cut) {
  std::vector<ProcessTree> out;
  for (const auto& m1 : side_models(cut.sigma1)) {
    for (const auto& m2 : side_models(cut.sigma2)) out.push_back(ProcessTree::node(cut.op, m1, m2));
  }
  return out;
}

namespace {

// Languages of the induced models, sampled once per (cut, max_len).
const std::vector<std::set<Trace>>& induced_languages(const Cut& cut, std::size_t max_len) {
  static std::mutex m;
  static std::map<std::pair<std::string, std::size_t>, std::vector<std::set<Trace>>> cache;
  std::lock_guard lock(m);
  auto& entry = cache[{to_string(cut), max_len}];
  if (entry.empty()) {
    for (const auto& model : induced_models(cut)) {
      entry.push_back(tree_language_sample(model, max_len));
    }
  }
  return entry;
}

}  // namespace

bool oracle_violates(const Cut& cut, const Rule& rule, std::size_t max_len) {
  for (const auto& language : induced_languages(cut, max_len)) {
    bool some_violation = false;
    for (const auto& t : language) {
      if (evaluate_trace(rule, t).violated) {
        some_violation = true;
        break;
      }
    }
    if (!some_violation) return false;
  }
  return true;
}

namespace {

class DotReader {
 public:
  explicit DotReader(std::string_view s) : s_(s) {}

  DotSummary run() {
    DotSummary r;
    try {
      skip();
      expect_word("digraph");
      r.graph_name = id();
      skip();
      expect('{');
      for (;;) {
        skip();
        if (peek() == '}') {
          ++i_;
          break;
        }
        const auto first = id();
        skip();
        if (peek() == '=') {  // graph attribute such as rankdir=LR
          ++i_;
          id();
        } else if (s_.substr(i_, 2) == "->") {
          i_ += 2;
          skip();
          id();
          ++r.edges;
        } else if (first != "node" && first != "edge" && first != "graph") {
          ++r.nodes;
        }
        skip();
        if (peek() == '[') attributes();
        skip();
        if (peek() == ';') ++i_;
      }
      skip();
      if (i_ != s_.size()) throw std::runtime_error("trailing content after graph");
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = std::string(e.what()) + " at byte " + std::to_string(i_);
    }
    return r;
  }

 private:
  char peek() const {
    if (i_ >= s_.size()) throw std::runtime_error("unexpected end of input");
    return s_[i_];
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  void expect(char c) {
    if (peek() != c) throw std::runtime_error(std::string("expected '") + c + "'");
    ++i_;
  }

  void expect_word(std::string_view w) {
    if (id() != w) throw std::runtime_error("expected " + std::string(w));
  }

  std::string id() {
    skip();
    std::string out;
    if (peek() == '"') {
      ++i_;
      for (;;) {
        const char c = peek();
        ++i_;
        if (c == '"') return out;
        if (c == '\\') {
          out.push_back(peek());
          ++i_;
          continue;
        }
        out.push_back(c);
      }
    }
    while (i_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.')) {
      out.push_back(s_[i_++]);
    }
    if (out.empty()) throw std::runtime_error("expected an identifier");
    return out;
  }

  void attributes() {
    expect('[');
    for (;;) {
      skip();
      if (peek() == ']') {
        ++i_;
        return;
      }
      id();
      skip();
      expect('=');
      id();
      skip();
      if (peek() == ',' || peek() == ';') ++i_;
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace

DotSummary parse_dot(std::string_view text) { return DotReader(text).run(); }

}  // namespace rgd_test
