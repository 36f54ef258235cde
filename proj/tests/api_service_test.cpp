#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include "rgd/api_service.hpp"
#include "support.hpp"

using namespace rgd;
using namespace rgd_test;
namespace fs = std::filesystem;

namespace {

const std::string kNotSuccession =
    R"({"constraints":[{"template":"NotSuccession","activities":["Doc-checked","Hist-checked"]}]})";

ClientConfig scripted(std::vector<std::string> responses) {
  ClientConfig c;
  c.responses = std::move(responses);
  return c;
}

fs::path fresh_dir(const std::string& tag) {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("rgd_" + tag + "_" + std::to_string(rd()));
  fs::remove_all(dir);
  return dir;
}

int status_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ApiError& e) {
    return e.status();
  }
  return 200;
}

// Blocks inside complete() until released.
struct Gate {
  std::promise<void> entered;
  std::shared_future<void> release;
};

class GateClient : public LlmClient {
 public:
  explicit GateClient(std::shared_ptr<Gate> g) : gate_(std::move(g)) {}
  std::string complete(std::span<const Message>) override {
    gate_->entered.set_value();
    gate_->release.wait();
    return kNotSuccession;
  }

 private:
  std::shared_ptr<Gate> gate_;
};

}  // namespace

TEST(Service, UploadAndDescribeLog) {
  Service svc;
  const auto up = svc.upload_log(read_data("table1.csv"), LogFormat::csv);
  EXPECT_EQ(up.at("traces"), 5);
  EXPECT_EQ(up.at("events"), 13);
  EXPECT_EQ(up.at("activities").size(), 6u);
  auto described = up;
  described.erase("format");
  EXPECT_EQ(svc.get_log(up.at("id")), described);

  const auto xes = svc.upload_log(read_data("table1.xes"), LogFormat::xes);
  EXPECT_EQ(xes.at("traces"), 5);
  EXPECT_NE(xes.at("id"), up.at("id"));

  EXPECT_EQ(status_of([&] { svc.get_log("0123456789abcdef"); }), 404);
  EXPECT_THROW(svc.upload_log("", LogFormat::csv), Error);
}

TEST(Service, ConversationRulesSelectionDiscovery) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const auto session = svc.create_session(log_id, scripted({"Which check comes first?", kNotSuccession}));
  const std::string sid = session.at("id");

  const auto q = svc.post_message(sid, "The checks have an order.");
  EXPECT_EQ(q.at("outcome"), "clarification");
  EXPECT_EQ(q.at("text"), "Which check comes first?");

  const auto r = svc.post_message(sid, "History is never checked after documents.");
  ASSERT_EQ(r.at("outcome"), "rules");
  ASSERT_EQ(r.at("rules").size(), 1u);
  const auto& row = r.at("rules")[0];
  EXPECT_EQ(row.at("template"), "NotSuccession");
  EXPECT_EQ(row.at("support_fraction"), "1/5");
  EXPECT_EQ(row.at("confidence_fraction"), "1/2");
  EXPECT_EQ(row.at("selected"), false);

  EXPECT_EQ(svc.put_selection(sid, {{"indices", {0}}}).at("selected").size(), 1u);
  EXPECT_EQ(svc.get_rules(sid).at("rules")[0].at("selected"), true);

  const auto d = svc.run_discovery(sid, {{"sup", 0.2}});
  EXPECT_EQ(d.at("model_version"), 1);
  const auto direct = discover(l1(), {Rule::binary(Template::not_succession, act("Doc-checked"),
                                                   act("Hist-checked"))},
                               {});
  EXPECT_EQ(d.at("model").at("text"), to_text(direct.tree));
  EXPECT_EQ(svc.get_model(sid, "text"), d.at("model").at("text"));
  EXPECT_EQ(nlohmann::json::parse(svc.get_model(sid, "json")), d.at("model").at("json"));
  EXPECT_TRUE(parse_dot(svc.get_model(sid, "dot")).ok);

  const auto history = svc.get_session(sid).at("history");
  EXPECT_EQ(history.size(), 4u);
}

TEST(Service, SelectionByLiteralAndErrors) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string sid = svc.create_session(log_id, scripted({})).at("id");
  const auto ok = svc.put_selection(
      sid, nlohmann::json::parse(R"({"rules":[{"template":"AtMost1","activities":["Doc-checked"]}]})"));
  EXPECT_EQ(ok.at("selected").size(), 1u);
  try {
    svc.put_selection(sid, nlohmann::json::parse(
                               R"({"indices":[4],"rules":[{"template":"AtMost1","activities":["X"]}]})"));
    FAIL() << "expected 422";
  } catch (const ApiError& e) {
    EXPECT_EQ(e.status(), 422);
    EXPECT_EQ(e.diagnostics().size(), 2u);
  }
  // A rejected selection leaves the previous one in place.
  EXPECT_EQ(svc.get_rules(sid).at("selected").size(), 1u);
}

TEST(Service, DiscoveryArguments) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string sid = svc.create_session(log_id, scripted({})).at("id");
  EXPECT_EQ(status_of([&] { svc.run_discovery(sid, {{"sup", 1.5}}); }), 400);
  EXPECT_EQ(status_of([&] { svc.run_discovery(sid, {{"sup", "high"}}); }), 400);
  EXPECT_EQ(status_of([&] { svc.run_discovery(sid, {{"fallback", "maybe"}}); }), 400);
  EXPECT_EQ(status_of([&] { svc.get_model(sid, "text"); }), 404);
  EXPECT_EQ(svc.run_discovery(sid, nlohmann::json::object()).at("sup"), 0.2);
  EXPECT_EQ(status_of([&] { svc.get_model(sid, "png"); }), 400);
}

TEST(Service, FallbackWarningsDrainOnMutationOnly) {
  Service svc;
  const std::string log_id =
      svc.upload_log("case:concept:name,concept:name\n1,a\n1,b\n", LogFormat::csv).at("id");
  const std::string sid = svc.create_session(log_id, scripted({})).at("id");
  svc.put_selection(sid, nlohmann::json::parse(
                             R"({"rules":[{"template":"NotCoExistence","activities":["a","b"]},
                                       {"template":"CoExistence","activities":["a","b"]}]})"));
  const auto d = svc.run_discovery(sid, {{"sup", 0.0}});
  EXPECT_FALSE(d.at("warnings").empty());
  EXPECT_TRUE(svc.get_rules(sid).at("warnings").empty());

  const auto abort = status_of([&] { svc.run_discovery(sid, {{"fallback", "abort"}}); });
  EXPECT_EQ(abort, 422);
  EXPECT_EQ(svc.get_session(sid).at("model_version"), 1);
  EXPECT_EQ(status_of([&] { svc.put_selection(sid, {{"indices", {-1}}}); }), 422);
}

TEST(Service, SessionsAreIsolated) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string s1 = svc.create_session(log_id, scripted({kNotSuccession})).at("id");
  const std::string s2 = svc.create_session(log_id, scripted({})).at("id");
  svc.post_message(s1, "rule");
  svc.put_selection(s1, {{"indices", {0}}});
  EXPECT_TRUE(svc.get_session(s2).at("history").empty());
  EXPECT_TRUE(svc.get_rules(s2).at("rules").empty());
  EXPECT_TRUE(svc.get_rules(s2).at("selected").empty());
}

TEST(Service, ReadsAreIdempotent) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string sid = svc.create_session(log_id, scripted({kNotSuccession})).at("id");
  svc.post_message(sid, "rule");
  const auto a = svc.get_session(sid);
  const auto b = svc.get_session(sid);
  EXPECT_EQ(a, b);
  EXPECT_EQ(svc.get_rules(sid), svc.get_rules(sid));
}

TEST(Service, ConcurrentMutationIsRejected) {
  auto gate = std::make_shared<Gate>();
  std::promise<void> release;
  gate->release = release.get_future().share();
  ServiceOptions options;
  options.client_factory = [gate](const ClientConfig&) { return std::make_unique<GateClient>(gate); };
  Service svc(options);
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string sid = svc.create_session(log_id, scripted({})).at("id");

  auto first = std::async(std::launch::async, [&] { return svc.post_message(sid, "one"); });
  gate->entered.get_future().wait();
  EXPECT_EQ(status_of([&] { svc.post_message(sid, "two"); }), 409);
  EXPECT_EQ(status_of([&] { svc.put_selection(sid, {{"indices", nlohmann::json::array()}}); }), 409);
  EXPECT_EQ(status_of([&] { svc.get_session(sid); }), 200);
  release.set_value();
  EXPECT_EQ(first.get().at("outcome"), "rules");
  EXPECT_EQ(svc.get_session(sid).at("history").size(), 2u);
}

TEST(Service, ClientFailureKeepsCompletedExchanges) {
  Service svc;
  const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
  const std::string sid =
      svc.create_session(log_id, scripted({R"({"constraints": [)"})).at("id");
  EXPECT_THROW(svc.post_message(sid, "x"), LlmError);
  EXPECT_EQ(svc.get_session(sid).at("history").size(), 2u);
}

TEST(Service, SnapshotsSurviveRestart) {
  const auto dir = fresh_dir("state");
  std::string sid;
  nlohmann::json before;
  {
    ServiceOptions o;
    o.state_dir = dir;
    Service svc(o);
    const std::string log_id = svc.upload_log(read_data("table1.csv"), LogFormat::csv).at("id");
    ClientConfig c = scripted({kNotSuccession, "later"});
    c.api_key = "secret-key";
    sid = svc.create_session(log_id, c).at("id");
    svc.post_message(sid, "rule");
    svc.put_selection(sid, {{"indices", {0}}});
    svc.run_discovery(sid, {{"sup", 0.0}});
    before = svc.get_session(sid);
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path());
    const std::string content((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(content.find("secret-key"), std::string::npos) << entry.path();
    EXPECT_NE(entry.path().extension(), ".tmp");
  }
  ServiceOptions o;
  o.state_dir = dir;
  Service svc(o);
  EXPECT_EQ(svc.get_session(sid), before);
  EXPECT_FALSE(svc.get_model(sid, "text").empty());
  // The remaining scripted reply is still available.
  EXPECT_EQ(svc.post_message(sid, "more").at("outcome"), "clarification");
  fs::remove_all(dir);
}

// --- HTTP ---------------------------------------------------------------------

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<HttpServer>(svc_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::string new_session(const std::vector<std::string>& responses) {
    auto up = client_->Post("/logs?format=csv", read_data("table1.csv"), "text/csv");
    EXPECT_EQ(up->status, 201);
    const auto log_id = nlohmann::json::parse(up->body).at("id");
    nlohmann::json body = {{"log_id", log_id}, {"client", {{"provider", "scripted"}, {"responses", responses}}}};
    auto s = client_->Post("/sessions", body.dump(), "application/json");
    EXPECT_EQ(s->status, 201);
    return nlohmann::json::parse(s->body).at("id");
  }

  Service svc_;
  std::unique_ptr<HttpServer> server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(Http, HealthAndProviders) {
  auto h = client_->Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  auto p = client_->Get("/providers");
  EXPECT_EQ(nlohmann::json::parse(p->body).at("providers").size(), 4u);
  auto missing = client_->Get("/nowhere");
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(nlohmann::json::parse(missing->body).contains("error"));
}

TEST_F(Http, JsonUploadWithColumnMapping) {
  nlohmann::json body = {{"format", "csv"},
                         {"content", "cid;act\n1;x\n1;y\n"},
                         {"columns", {{"case", "cid"}, {"activity", "act"}}}};
  auto bad = client_->Post("/logs", body.dump(), "application/json");
  EXPECT_EQ(bad->status, 422);  // ';' is not the delimiter
  body["content"] = "cid,act\n1,x\n1,y\n";
  auto ok = client_->Post("/logs", body.dump(), "application/json");
  ASSERT_EQ(ok->status, 201);
  EXPECT_EQ(nlohmann::json::parse(ok->body).at("events"), 2);
  auto xes = client_->Post("/logs", read_data("table1.xes"), "application/xml");
  EXPECT_EQ(xes->status, 201);
}

TEST_F(Http, FullFlow) {
  const auto sid = new_session({kNotSuccession});
  auto m = client_->Post("/sessions/" + sid + "/messages", R"({"text":"rule please"})", "application/json");
  ASSERT_EQ(m->status, 200);
  EXPECT_EQ(nlohmann::json::parse(m->body).at("outcome"), "rules");
  auto sel = client_->Put("/sessions/" + sid + "/selection", R"({"indices":[0]})", "application/json");
  EXPECT_EQ(sel->status, 200);
  auto bad_sup = client_->Post("/sessions/" + sid + "/discover", R"({"sup":1.5})", "application/json");
  EXPECT_EQ(bad_sup->status, 400);
  EXPECT_NE(nlohmann::json::parse(bad_sup->body).at("error").get<std::string>().find("sup"),
            std::string::npos);
  auto d = client_->Post("/sessions/" + sid + "/discover", R"({"sup":0.0})", "application/json");
  ASSERT_EQ(d->status, 200);
  auto golden = read_data("../golden/l1_r2_sup0.txt");
  golden.erase(golden.find_last_not_of('\n') + 1);
  EXPECT_EQ(nlohmann::json::parse(d->body).at("model").at("text"), golden);

  auto text = client_->Get("/sessions/" + sid + "/model");
  EXPECT_EQ(text->status, 200);
  EXPECT_TRUE(text->get_header_value("Content-Type").starts_with("text/plain"));
  auto dot = client_->Get("/sessions/" + sid + "/model?format=dot");
  EXPECT_EQ(dot->get_header_value("Content-Type"), "text/vnd.graphviz");
  EXPECT_TRUE(parse_dot(dot->body).ok);
  auto json = client_->Get("/sessions/" + sid + "/model?format=json");
  EXPECT_EQ(json->get_header_value("Content-Type"), "application/json");
  EXPECT_NO_THROW(tree_from_json(nlohmann::json::parse(json->body)));
  EXPECT_EQ(client_->Get("/sessions/" + sid + "/model?format=svg")->status, 400);

  auto r1 = client_->Get("/sessions/" + sid + "/rules");
  auto r2 = client_->Get("/sessions/" + sid + "/rules");
  EXPECT_EQ(r1->body, r2->body);
}

TEST_F(Http, ErrorMapping) {
  EXPECT_EQ(client_->Get("/sessions/0000000000000000")->status, 404);
  EXPECT_EQ(client_->Post("/sessions", "{not json", "application/json")->status, 400);
  EXPECT_EQ(client_->Post("/sessions", R"({"log_id":"0000000000000000"})", "application/json")->status, 404);
  const auto sid = new_session({R"({"constraints": [)"});
  auto m = client_->Post("/sessions/" + sid + "/messages", R"({"text":"x"})", "application/json");
  EXPECT_EQ(m->status, 502);
  EXPECT_EQ(nlohmann::json::parse(m->body).at("retryable"), false);
  auto empty = client_->Post("/sessions/" + sid + "/messages", R"({"text":"  "})", "application/json");
  EXPECT_EQ(empty->status, 400);
  auto sel = client_->Put("/sessions/" + sid + "/selection", R"({"indices":[3]})", "application/json");
  EXPECT_EQ(sel->status, 422);
  EXPECT_EQ(nlohmann::json::parse(sel->body).at("diagnostics").size(), 1u);
}

TEST_F(Http, ParallelSessions) {
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(new_session({kNotSuccession}));
  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (const auto& id : ids) {
    workers.emplace_back([&, id] {
      httplib::Client c("127.0.0.1", port_);
      auto r = c.Post("/sessions/" + id + "/messages", R"({"text":"x"})", "application/json");
      if (r && r->status == 200) ++ok;
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(ok.load(), 4);
}
