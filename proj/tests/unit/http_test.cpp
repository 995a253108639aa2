#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "derivmine/curation/http.hpp"
#include "support/support.hpp"

using namespace derivmine;
using namespace derivmine::curation;
using store::Stage;

namespace {

struct Server {
  Server() : samples(dir / "store", clock), service(samples, clock, dir / "exports"), http(service, ui_dir()) {
    for (int i = 1; i <= 3; ++i) {
      store::Sample s;
      s.paper_id = "p";
      s.expression.expr_id = "e" + std::to_string(i);
      s.sample_id = "p:e" + std::to_string(i) + ":q1";
      s.expression_index = i;
      s.query = "q";
      s.whole_label = "w";
      s.evidence = std::vector<store::ContextSnippet>{};
      s.question = "Q" + std::to_string(i);
      s.answer = "A" + std::to_string(i);
      s.stage = Stage::filtered;
      samples.create(s);
    }
    port = http.bind("127.0.0.1", 0);
    thread = std::thread([this] { http.listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 100 && !client->Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Server() {
    http.stop();
    thread.join();
  }

  std::filesystem::path ui_dir() {
    std::filesystem::create_directories(dir / "ui");
    write_file_atomic(dir / "ui/index.html", "<html>review</html>");
    return dir / "ui";
  }

  httplib::Result post(const std::string& path, const json& body, httplib::Headers headers = {}) {
    return client->Post(path, headers, body.dump(), "application/json");
  }

  dmtest::TempDir dir;
  ManualClock clock;
  store::SampleStore samples;
  CurationService service;
  CurationServer http;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

json decision_body(const std::string& id, std::int64_t version, const std::string& action, bool rubric = true) {
  return json{{"sample_id", id},         {"reviewer_id", "alice"}, {"q1_reasoning_type", rubric},
              {"q2_clarity", rubric},    {"q3_correctness", rubric}, {"q4_density", rubric},
              {"action", action},        {"base_version", version}};
}

}  // namespace

TEST_CASE("status mapping") {
  CHECK(http_status(Errc::UnknownSample) == 404);
  CHECK(http_status(Errc::QueueEmpty) == 404);
  CHECK(http_status(Errc::VersionConflict) == 409);
  CHECK(http_status(Errc::RubricViolation) == 422);
  CHECK(http_status(Errc::InvalidDecision) == 400);
  CHECK(http_status(Errc::IoError) == 500);
}

TEST_CASE("review workflow over HTTP") {
  Server s;
  REQUIRE(s.port > 0);
  auto health = s.client->Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto empty = s.client->Get("/queue/next?reviewer=alice");
  REQUIRE(empty);
  CHECK(empty->status == 404);
  CHECK(json::parse(empty->body)["code"] == "QueueEmpty");

  auto enq = s.post("/queue/enqueue", {{"sample_ids", {"p:e1:q1", "p:e2:q1"}}});
  REQUIRE(enq);
  CHECK(enq->status == 200);
  CHECK(json::parse(enq->body)["enqueued"] == 2);
  CHECK(s.post("/queue/enqueue", {{"sample_ids", {"ghost"}}})->status == 404);

  CHECK(s.client->Get("/queue/next")->status == 400);
  auto next = s.client->Get("/queue/next", {{"X-Reviewer-Id", "alice"}});
  REQUIRE(next);
  REQUIRE(next->status == 200);
  const auto item = json::parse(next->body);
  CHECK(item["sample"]["sample_id"] == "p:e1:q1");
  CHECK(item["lease"]["reviewer_id"] == "alice");

  CHECK(s.client->Get("/samples/p:e2:q1")->status == 200);
  CHECK(s.client->Get("/samples/none")->status == 404);

  auto violation = s.post("/samples/p:e1:q1/decision", decision_body("p:e1:q1", 1, "accept", false));
  CHECK(violation->status == 422);
  CHECK(json::parse(violation->body)["code"] == "RubricViolation");
  CHECK(s.post("/samples/p:e1:q1/decision", decision_body("p:e2:q1", 1, "accept"))->status == 400);
  CHECK(s.post("/samples/p:e1:q1/decision", json{{"action", 5}})->status == 400);
  CHECK(s.client->Post("/samples/p:e1:q1/decision", "{not json", "application/json")->status == 400);

  auto ok = s.post("/samples/p:e1:q1/decision", decision_body("p:e1:q1", 1, "accept"));
  REQUIRE(ok);
  CHECK(ok->status == 200);
  const auto body = json::parse(ok->body);
  CHECK(body["stage"] == "accepted");
  CHECK(body["version"] == 2);
  CHECK(body["decision_id"] == "p:e1:q1@v1");
  auto conflict = s.post("/samples/p:e1:q1/decision", decision_body("p:e1:q1", 1, "accept"));
  CHECK(conflict->status == 409);

  auto header_reviewer = decision_body("p:e2:q1", 1, "reject", false);
  header_reviewer.erase("reviewer_id");
  CHECK(s.post("/samples/p:e2:q1/decision", header_reviewer, {{"X-Reviewer-Id", "bob"}})->status == 200);

  auto audit = s.client->Get("/samples/p:e1:q1/audit");
  REQUIRE(audit);
  const auto trail = json::parse(audit->body);
  CHECK(trail["events"].size() == 3);
  CHECK(trail["events"].back()["kind"] == "decision");

  auto ex = s.post("/exports", {{"name", "v1"}});
  REQUIRE(ex);
  CHECK(ex->status == 201);
  CHECK(s.post("/exports", {{"name", "v1"}})->status == 409);
  CHECK(s.post("/exports", {{"name", "t"}, {"policy", "top_k_by_difficulty_rank"}})->status == 400);
  auto got = s.client->Get("/exports/v1");
  REQUIRE(got);
  const auto exported = json::parse(got->body);
  REQUIRE(exported["items"].size() == 1);
  CHECK(exported["items"][0]["item_id"] == "p:e1:q1");
  CHECK(s.client->Get("/exports/none")->status == 404);

  auto ui = s.client->Get("/ui/index.html");
  REQUIRE(ui);
  CHECK(ui->body == "<html>review</html>");
}

TEST_CASE("binding a taken port fails") {
  Server s;
  CurationServer other(s.service);
  CHECK_THROWS_WITH_AS(other.bind("127.0.0.1", s.port), doctest::Contains("IoError"), Error);
}
