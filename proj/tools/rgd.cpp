// rgd: headless front end for discovery, rule checking, evaluation and the
// HTTP service.
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rgd/api_service.hpp"
#include "rgd/declare.hpp"
#include "rgd/dfg.hpp"
#include "rgd/evaluation.hpp"
#include "rgd/imr.hpp"
#include "rgd/llm.hpp"
#include "rgd/process_tree.hpp"
#include "rgd/provider.hpp"

namespace {

using namespace rgd;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (!content.ends_with('\n')) std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!content.ends_with('\n')) out << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

struct LogOptions {
  std::string path;
  std::string format;  // csv, xes or empty for "by extension"
  CsvConfig csv;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--log", path, "event log file (.csv or .xes)")->required();
    cmd->add_option("--log-format", format, "csv or xes (default: by extension)")
        ->check(CLI::IsMember({"csv", "xes"}));
    cmd->add_option("--case-column", csv.case_column)->capture_default_str();
    cmd->add_option("--activity-column", csv.activity_column)->capture_default_str();
    cmd->add_option("--timestamp-column", csv.timestamp_column)->capture_default_str();
  }

  EventLog load() const {
    const auto content = read_file(path);
    const bool xes = format == "xes" || (format.empty() && path.ends_with(".xes"));
    if (!xes) return parse_csv(content, csv);
    auto r = parse_xes(content);
    if (r.skipped_events > 0) {
      std::cerr << "warning: skipped " << r.skipped_events << " events without concept:name\n";
    }
    return std::move(r.log);
  }
};

std::vector<Rule> load_rules(const std::string& path, const EventLog& log) {
  if (path.empty()) return {};
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), ParseError::Unit::byte_offset, e.byte);
  }
  return rules_from_json(doc, alphabet(log));
}

std::string render(const ProcessTree& tree, const std::string& format) {
  if (format == "json") return to_json(tree).dump(2);
  if (format == "dot") return to_dot(tree);
  return to_text(tree);
}

int cmd_discover(const LogOptions& log_opts, const std::string& rules_path, double sup,
                 const std::string& fallback, const std::string& out,
                 const std::string& out_format) {
  const auto log = log_opts.load();
  const auto rules = load_rules(rules_path, log);
  DiscoveryConfig config;
  config.sup = sup;
  config.fallback = fallback == "abort" ? FallbackPolicy::abort : FallbackPolicy::warn_and_ignore_rules;
  const auto result = discover(log, rules, config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_output(out, render(result.tree, out_format));
  return 0;
}

int cmd_check_rules(const LogOptions& log_opts, const std::string& rules_path, bool as_json) {
  const auto log = log_opts.load();
  const auto rules = load_rules(rules_path, log);
  const auto entries = batch_stats(rules, log);
  if (as_json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
      const auto& s = *e.stats;
      auto row = rule_to_json(s.rule);
      row["activated"] = s.activated;
      row["satisfied"] = s.satisfied;
      row["traces"] = s.traces;
      row["support"] = format_ratio(s.support);
      row["confidence"] = format_ratio(s.confidence);
      rows.push_back(std::move(row));
    }
    std::cout << rows.dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(48) << "rule" << std::right << std::setw(10) << "activated"
            << std::setw(10) << "satisfied" << std::setw(10) << "support" << std::setw(12)
            << "confidence" << '\n';
  for (const auto& e : entries) {
    const auto& s = *e.stats;
    std::cout << std::left << std::setw(48) << to_string(s.rule) << std::right << std::setw(10)
              << s.activated << std::setw(10) << s.satisfied << std::setw(10)
              << format_ratio(s.support) << std::setw(12) << format_ratio(s.confidence) << '\n';
  }
  return 0;
}

std::unique_ptr<LlmClient> make_client(const std::string& client_arg, int timeout) {
  const auto colon = client_arg.find(':');
  if (colon == std::string::npos) {
    throw PreconditionError("--client expects scripted:<file> or <provider>:<model>");
  }
  const auto kind = client_arg.substr(0, colon);
  const auto arg = client_arg.substr(colon + 1);
  if (kind == "scripted") {
    return std::make_unique<ScriptedClient>(ScriptedClient::parse_transcript(read_file(arg)));
  }
  return std::make_unique<ProviderClient>(
      resolve_provider(kind, arg, std::nullopt, std::nullopt, std::chrono::seconds{timeout}));
}

int cmd_evaluate(const std::string& cases_path, const std::string& client_spec,
                 const std::string& variant, const std::string& granularity,
                 const std::string& out, std::size_t concurrency, std::size_t max_attempts,
                 int timeout) {
  auto set = parse_cases(read_file(cases_path));
  auto cases = granularity == "par" ? make_paragraphs(set.cases) : set.cases;
  auto client = make_client(client_spec, timeout);
  SuiteOptions options;
  options.variant = *prompt_variant_from_name(variant);
  options.concurrency = concurrency;
  options.max_attempts = max_attempts;
  const auto report = run_suite(cases, set.activities, *client, options);
  auto j = to_json(report);
  j["granularity"] = granularity;
  j["prompt_variant"] = variant;
  write_output(out, j.dump(2));
  std::cerr << "recall " << format_ratio(report.recall) << ", precision "
            << format_ratio(report.precision) << ", error rate " << format_ratio(report.error_rate)
            << ", failure rate " << format_ratio(report.failure_rate) << '\n';
  return 0;
}

HttpServer* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& state_dir) {
  ServiceOptions options;
  if (!state_dir.empty()) options.state_dir = state_dir;
  Service service(std::move(options));
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "error: cannot bind " << host << ":" << port << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::cerr << "listening on http://" << host << ":" << bound << '\n';
  server.listen();
  return 0;
}

int cmd_dfg(const LogOptions& log_opts, const std::string& out) {
  write_output(out, to_dot(build_dfg(log_opts.load())));
  return 0;
}

int default_port() {
  if (const char* p = std::getenv("RGD_PORT")) return std::atoi(p);
  return 8080;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-guided process discovery"};
  app.require_subcommand(1);

  LogOptions discover_log;
  std::string discover_rules;
  double sup = 0.2;
  std::string fallback = "warn";
  std::string discover_out;
  std::string out_format = "text";
  auto* discover_cmd = app.add_subcommand("discover", "discover a process tree from an event log");
  discover_log.add_to(discover_cmd);
  discover_cmd->add_option("--rules", discover_rules, "rules file {\"constraints\": [...]}");
  discover_cmd->add_option("--sup", sup, "missing-behaviour weight in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  discover_cmd->add_option("--fallback", fallback, "when every cut is pruned: warn or abort")
      ->check(CLI::IsMember({"warn", "abort"}))
      ->capture_default_str();
  discover_cmd->add_option("--out", discover_out, "output file (default: stdout)");
  discover_cmd->add_option("--out-format", out_format)
      ->check(CLI::IsMember({"text", "json", "dot"}))
      ->capture_default_str();

  LogOptions check_log;
  std::string check_rules;
  bool check_json = false;
  auto* check_cmd = app.add_subcommand("check-rules", "support and confidence of rules on a log");
  check_log.add_to(check_cmd);
  check_cmd->add_option("--rules", check_rules)->required();
  check_cmd->add_flag("--json", check_json, "print JSON instead of a table");

  std::string cases_path;
  std::string client_spec;
  std::string variant = "few";
  std::string granularity = "s2s";
  std::string eval_out;
  std::size_t concurrency = 1;
  std::size_t max_attempts = Conversation::kDefaultMaxAttempts;
  int timeout = 60;
  auto* eval_cmd = app.add_subcommand("evaluate", "score rule extraction against ground truth");
  eval_cmd->add_option("--cases", cases_path, "case fixture JSON")->required();
  eval_cmd->add_option("--client", client_spec, "scripted:<file> or <provider>:<model>")
      ->required();
  eval_cmd->add_option("--prompt-variant", variant)
      ->check(CLI::IsMember({"zero", "few"}))
      ->capture_default_str();
  eval_cmd->add_option("--granularity", granularity)
      ->check(CLI::IsMember({"s2s", "par"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "report file (default: stdout)");
  eval_cmd->add_option("--concurrency", concurrency)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-attempts", max_attempts)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--timeout", timeout, "provider timeout in seconds");

  std::string host = "127.0.0.1";
  int port = default_port();
  std::string state_dir;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port, "port (default: $RGD_PORT or 8080)");
  serve_cmd->add_option("--state-dir", state_dir, "directory for JSON snapshots");

  LogOptions dfg_log;
  std::string dfg_out;
  auto* dfg_cmd = app.add_subcommand("dfg", "write the directly-follows graph as DOT");
  dfg_log.add_to(dfg_cmd);
  dfg_cmd->add_option("--out", dfg_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*discover_cmd) {
      return cmd_discover(discover_log, discover_rules, sup, fallback, discover_out, out_format);
    }
    if (*check_cmd) return cmd_check_rules(check_log, check_rules, check_json);
    if (*eval_cmd) {
      return cmd_evaluate(cases_path, client_spec, variant, granularity, eval_out, concurrency,
                          max_attempts, timeout);
    }
    if (*serve_cmd) return cmd_serve(host, port, state_dir);
    if (*dfg_cmd) return cmd_dfg(dfg_log, dfg_out);
  } catch (const DiscoveryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const EmptyLogError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
