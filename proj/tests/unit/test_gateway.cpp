#include "doctest.h"

#include "tablerouter/error.hpp"
#include "tablerouter/gateway.hpp"
#include "tablerouter/manifest.hpp"
#include "tablerouter/prompts.hpp"

#include "httplib.h"

#include <atomic>
#include <thread>

using namespace tablerouter;
using nlohmann::json;

namespace {

std::string golden(const std::string& name) {
  auto text = read_file(std::string(SOURCE_DIR) + "/tests/golden/prompts/" + name + ".txt");
  REQUIRE(text);
  if (!text->empty() && text->back() == '\n') text->pop_back();
  return *text;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("templates match the reference prompt blocks") {
  for (Stage s : {Stage::tsr, Stage::direct_qa, Stage::route, Stage::plan, Stage::repair}) {
    const std::string name(to_string(s));
    CHECK_MESSAGE(std::string(system_template(s)) == golden(name + "_system"), name);
    CHECK_MESSAGE(std::string(user_template(s)) == golden(name + "_user"), name);
  }
}

TEST_CASE("slots are filled") {
  PromptPayload p;
  p.questions = {"Quel total ?", "Quelle dent ?"};
  const auto d = build_request(Stage::direct_qa, p);
  CHECK(d.user.find("Q1: Quel total ?\nQ2: Quelle dent ?") != std::string::npos);
  CHECK(d.user.find("Q1: ...") == std::string::npos);
  CHECK(d.system == golden("direct_qa_system"));
  CHECK(d.decoding.temperature == 0.0);
  CHECK(d.decoding.max_new_tokens == 1024);

  p.table_json = R"({"headers":["A"],"rows":[]})";
  p.category_hints = {"aggregation_sum", "other"};
  const auto plan = build_request(Stage::plan, p);
  CHECK(plan.user.find("TABLE_JSON:\n{\"headers\":[\"A\"],\"rows\":[]}") != std::string::npos);
  CHECK(plan.user.find(R"(["aggregation_sum","other"])") != std::string::npos);

  PromptPayload r;
  r.table_json = "{}";
  r.qid = 3;
  r.category = "count_equals";
  r.question = "Combien ?";
  r.error = "UnknownHeader: Typ";
  const auto rep = build_request(Stage::repair, r);
  CHECK(rep.user.find("QID: 3\nCATEGORY: count_equals\nQUESTION: Combien ?\nERROR: UnknownHeader: Typ") != std::string::npos);
  CHECK(rep.decoding.max_new_tokens == 512);
  CHECK(build_request(Stage::tsr, {}).decoding.max_new_tokens == 4096);
}

TEST_CASE("missing slots are reported") {
  CHECK(code_of([] { build_request(Stage::direct_qa, {}); }) == ErrorCode::MissingSlot);
  PromptPayload p;
  p.questions = {"q"};
  CHECK(code_of([&] { build_request(Stage::plan, p); }) == ErrorCode::MissingSlot);
  p.table_json = "{}";
  CHECK(code_of([&] { build_request(Stage::plan, p); }) == ErrorCode::MissingSlot);
  PromptPayload r;
  r.table_json = "{}";
  CHECK(code_of([&] { build_request(Stage::repair, r); }) == ErrorCode::MissingSlot);
}

TEST_CASE("merged system prompt goes into the user turn") {
  PromptPayload p;
  p.questions = {"q"};
  const auto m = build_request(Stage::route, p, true);
  CHECK(m.system.empty());
  CHECK(m.user.rfind(golden("route_system") + "\n\n", 0) == 0);
}

TEST_CASE("stop strings") {
  const auto& stops = default_stop_strings();
  CHECK(apply_stop_strings("{\"a\":1}<|im_end|>junk", stops) == "{\"a\":1}");
  CHECK(apply_stop_strings("answer</s>", stops) == "answer");
  CHECK(apply_stop_strings("```json\n{\"a\":1}\n```\ntrailing", stops) == "```json\n{\"a\":1}\n");
  CHECK(apply_stop_strings("{\"a\":1}\n```python\nx", stops) == "{\"a\":1}\n");
  CHECK(apply_stop_strings("plain", stops) == "plain");
}

TEST_CASE("scripted gateway consumes entries in order") {
  auto gw = ScriptedGateway::from_json(json::parse(R"([
    {"stage":"route","match":"beta","reply":"B"},
    {"stage":"route","reply":"first"},
    {"stage":"route","reply":"second"},
    {"stage":"plan","reply":"P","repeat":true}
  ])"));
  PromptPayload p;
  p.questions = {"alpha"};
  CHECK(gw->call(build_request(Stage::route, p)) == "first");
  CHECK(gw->call(build_request(Stage::route, p)) == "second");
  p.questions = {"beta"};
  CHECK(gw->call(build_request(Stage::route, p)) == "B");
  CHECK(code_of([&] { gw->call(build_request(Stage::route, p)); }) == ErrorCode::ScriptExhausted);
  p.table_json = "{}";
  p.category_hints = {"other"};
  CHECK(gw->call(build_request(Stage::plan, p)) == "P");
  CHECK(gw->call(build_request(Stage::plan, p)) == "P");
  CHECK(gw->calls(Stage::route) == 4);
  CHECK(gw->calls(Stage::plan) == 2);
  CHECK(gw->remaining() == 0);
}

TEST_CASE("scripted replies go through the stop strings") {
  auto gw = ScriptedGateway::from_json(json::parse(R"({"entries":[{"stage":"direct_qa","reply":"{\"answers\":[\"1\"]}<|eot_id|>more"}]})"));
  PromptPayload p;
  p.questions = {"q"};
  CHECK(gw->call(build_request(Stage::direct_qa, p)) == "{\"answers\":[\"1\"]}");
}

TEST_CASE("gateway spec parsing") {
  CHECK(code_of([] { make_gateway("ftp://x"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { make_gateway("scripted:/nonexistent/script.json"); }) == ErrorCode::FileUnreadable);
  CHECK(make_gateway("http://127.0.0.1:9/v1/chat/completions") != nullptr);
}

TEST_CASE("http gateway retries transient failures") {
  httplib::Server server;
  std::atomic<int> hits{0};
  json last_body;
  std::mutex mu;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits.fetch_add(1) < 2) {
      res.status = 500;
      return;
    }
    {
      std::lock_guard lock(mu);
      last_body = json::parse(req.body);
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"{\"answers\":[\"9\"]}```tail"}}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpGatewayConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "test-model";
  cfg.backoff = std::chrono::milliseconds(1);
  HttpGateway gw(cfg);
  PromptPayload p;
  p.questions = {"q"};
  ChatRequest req = build_request(Stage::direct_qa, p);
  req.image = std::string("\x89PNG", 4);
  CHECK(gw.call(req) == "{\"answers\":[\"9\"]}");
  CHECK(gw.retries_performed() == 2);
  CHECK(hits.load() == 3);
  {
    std::lock_guard lock(mu);
    CHECK(last_body["model"] == "test-model");
    CHECK(last_body["temperature"] == 0.0);
    CHECK(last_body["messages"][0]["role"] == "system");
    const auto& content = last_body["messages"][1]["content"];
    CHECK(content[0]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);
    CHECK(content[1]["text"].get<std::string>().find("Q1: q") != std::string::npos);
  }

  server.stop();
  th.join();
}

TEST_CASE("http gateway gives up on an unreachable endpoint") {
  HttpGatewayConfig cfg;
  cfg.url = "http://127.0.0.1:9/v1/chat/completions";
  cfg.retries = 1;
  cfg.backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(2);
  HttpGateway gw(cfg);
  PromptPayload p;
  p.questions = {"q"};
  CHECK(code_of([&] { gw.call(build_request(Stage::direct_qa, p)); }) == ErrorCode::ModelUnavailable);
  CHECK(gw.retries_performed() == 1);
}
