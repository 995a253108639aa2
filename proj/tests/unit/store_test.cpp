#include <doctest.h>

#include "derivmine/core/clock.hpp"
#include "derivmine/core/error.hpp"
#include "derivmine/store/sample_store.hpp"
#include "support/support.hpp"

using namespace derivmine;
using namespace derivmine::store;

namespace {

Sample make_sample(const std::string& id, std::int64_t expr_index) {
  Sample s;
  s.sample_id = id;
  s.paper_id = "p";
  s.expression.expr_id = "e" + std::to_string(expr_index);
  s.expression.latex = "x=" + std::to_string(expr_index);
  s.expression_index = expr_index;
  return s;
}

Sample advance_to_filtered(Sample s) {
  s.stage = Stage::drafted;
  s.query = "Derive x.";
  s.stage = Stage::retrieved;
  s.whole_label = "x is derived.";
  s.evidence = std::vector<ContextSnippet>{{"ctx", "main.tex:1"}};
  s.question = "Show x.";
  s.answer = "x follows.";
  s.stage = Stage::filtered;
  return s;
}

}  // namespace

TEST_CASE("samples survive reopen and replay matches the snapshot") {
  dmtest::TempDir dir;
  ManualClock clock;
  {
    SampleStore store(dir / "s", clock, {.snapshot_every = 2});
    for (int i = 3; i >= 1; --i) store.create(make_sample("p:e" + std::to_string(i), i));
    CHECK_THROWS_WITH_AS(store.create(make_sample("p:e1", 1)), doctest::Contains("DuplicateId"), Error);
    store.record(advance_to_filtered(*store.get("p:e2")), "update");
    AgentTranscript t;
    t.transcript_id = transcript_id("p:e2", AgentRole::query_draft, 1);
    t.key = "p:e2";
    t.prompt_text = "P";
    t.raw_response = "R";
    store.append_transcript(t);
    CHECK(store.enqueue({"p:e2"}) == 1);
    CHECK(store.enqueue({"p:e2"}) == 0);
    CHECK_THROWS_WITH_AS(store.enqueue({"p:e1"}), doctest::Contains("NotReviewable"), Error);
    CHECK_THROWS_WITH_AS(store.enqueue({"nope"}), doctest::Contains("UnknownSample"), Error);
    store.flush();
  }
  const auto replayed = SampleStore::replay(dir / "s");
  CHECK(replayed == SampleStore::load_snapshot(dir / "s"));
  SampleStore reopened(dir / "s", clock);
  const auto all = reopened.samples();
  REQUIRE(all.size() == 3);
  CHECK(all[0].sample_id == "p:e1");
  CHECK(all[2].sample_id == "p:e3");
  CHECK(reopened.get("p:e2")->stage == Stage::review_pending);
  CHECK(reopened.get("p:e2")->queue_position == std::optional<std::int64_t>(1));
  CHECK(reopened.transcript("p:e2/query_draft/1")->raw_response == "R");
  CHECK(reopened.last_seq() == 5);
  CHECK(reopened.events_for("p:e2").size() == 3);
}

TEST_CASE("stage never moves backwards") {
  dmtest::TempDir dir;
  ManualClock clock;
  SampleStore store(dir / "s", clock);
  store.create(make_sample("a", 1));
  store.record(advance_to_filtered(*store.get("a")), "update");
  auto back = *store.get("a");
  back.stage = Stage::drafted;
  CHECK_THROWS_AS(store.record(back, "update"), std::logic_error);
  CHECK_THROWS_WITH_AS(store.record(make_sample("ghost", 9), "update"), doctest::Contains("UnknownSample"), Error);
}

TEST_CASE("stage field requirements") {
  auto s = make_sample("a", 1);
  CHECK(stage_violations(s).empty());
  s.stage = Stage::refined;
  CHECK(stage_violations(s).size() >= 4);
  s.stage = Stage::rejected;
  CHECK(stage_violations(s).empty());
  CHECK(stage_violations(advance_to_filtered(make_sample("b", 2))).empty());
}

TEST_CASE("sample and event json round trip") {
  auto s = advance_to_filtered(make_sample("a", 1));
  s.self_containment_report = json{{"ok", false}};
  s.transcripts = {"t1", "t2"};
  CHECK(sample_from_json(to_json(s)) == s);
  StoreEvent e;
  e.seq = 4;
  e.kind = "decision";
  e.sample_id = "a";
  e.decision = json{{"decision", "accept"}};
  e.sample = to_json(s);
  CHECK(event_from_json(to_json(e)) == e);
  for (auto st : {Stage::extracted, Stage::review_pending, Stage::rejected}) CHECK(parse_stage(to_string(st)) == st);
  CHECK(is_terminal(Stage::accepted));
  CHECK_FALSE(is_terminal(Stage::review_pending));
}
