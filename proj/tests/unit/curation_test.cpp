#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <tuple>

#include "derivmine/core/error.hpp"
#include "derivmine/curation/service.hpp"
#include "support/support.hpp"

using namespace derivmine;
using namespace derivmine::curation;
using store::Sample;
using store::Stage;

namespace {

Sample filtered_sample(const std::string& paper, int expr) {
  Sample s;
  s.paper_id = paper;
  s.expression.expr_id = "e" + std::to_string(expr);
  s.expression.latex = "x_" + std::to_string(expr);
  s.sample_id = paper + ":" + s.expression.expr_id + ":q1";
  s.expression_index = expr;
  s.query = "Derive x.";
  s.whole_label = "x follows.";
  s.evidence = std::vector<store::ContextSnippet>{};
  s.question = "Show $x_" + std::to_string(expr) + "$.";
  s.answer = "It follows.";
  s.stage = Stage::filtered;
  return s;
}

ReviewDecision decision(const Sample& s, Action a, bool all_true = true, std::string reviewer = "r1") {
  ReviewDecision d;
  d.sample_id = s.sample_id;
  d.reviewer_id = std::move(reviewer);
  d.q1_reasoning_type = d.q2_clarity = d.q3_correctness = d.q4_density = all_true;
  d.action = a;
  d.base_version = s.version;
  return d;
}

struct Fixture {
  Fixture() : samples(dir / "store", clock, {.snapshot_every = 64}), service(samples, clock, dir / "exports") {}

  void seed(int n, const std::string& paper = "p") {
    std::vector<std::string> ids;
    for (int i = 1; i <= n; ++i) {
      auto s = filtered_sample(paper, i);
      samples.create(s);
      ids.push_back(s.sample_id);
    }
    service.enqueue_samples(ids);
  }

  dmtest::TempDir dir;
  ManualClock clock;
  store::SampleStore samples;
  CurationService service;
};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

}  // namespace

TEST_CASE("queue order and leases") {
  Fixture f;
  f.seed(3);
  CHECK(f.service.queue_length() == 3);
  const auto a = f.service.next_for_review("alice");
  CHECK(a.sample.sample_id == "p:e1:q1");
  CHECK(a.lease->reviewer_id == "alice");
  CHECK(f.service.next_for_review("alice").sample.sample_id == "p:e1:q1");
  CHECK(f.service.next_for_review("bob").sample.sample_id == "p:e2:q1");
  f.clock.advance(std::chrono::minutes(31));
  CHECK(f.service.next_for_review("carol").sample.sample_id == "p:e1:q1");
  CHECK(code_of([&] { f.service.next_for_review("dave", std::string("other")); }) == Errc::QueueEmpty);
}

TEST_CASE("decision rules") {
  Fixture f;
  f.seed(4);
  const auto s1 = *f.samples.get("p:e1:q1");
  auto bad = decision(s1, Action::accept);
  bad.q3_correctness = false;
  CHECK(code_of([&] { f.service.submit_decision(bad); }) == Errc::RubricViolation);
  auto stale = decision(s1, Action::accept);
  stale.base_version = 0;
  CHECK(code_of([&] { f.service.submit_decision(stale); }) == Errc::VersionConflict);
  auto anon = decision(s1, Action::accept);
  anon.reviewer_id.clear();
  CHECK(code_of([&] { f.service.submit_decision(anon); }) == Errc::InvalidDecision);
  CHECK(code_of([&] { f.service.submit_decision(decision(s1, Action::edit)); }) == Errc::InvalidDecision);

  auto edit = decision(s1, Action::edit, false);
  edit.edited_answer = "Edited.";
  const auto edited = f.service.submit_decision(edit);
  CHECK(edited.version == 2);
  CHECK(edited.stage == Stage::review_pending);
  CHECK(edited.answer == std::optional<std::string>("Edited."));
  CHECK(code_of([&] { f.service.submit_decision(decision(s1, Action::accept)); }) == Errc::VersionConflict);
  const auto accepted = f.service.submit_decision(decision(edited, Action::accept));
  CHECK(accepted.stage == Stage::accepted);
  CHECK(code_of([&] { f.service.submit_decision(decision(accepted, Action::reject)); }) == Errc::NotReviewable);

  const auto rejected = f.service.submit_decision(decision(*f.samples.get("p:e2:q1"), Action::reject, false));
  CHECK(rejected.reject_reason == std::optional<std::string>("reviewer"));
  CHECK(f.service.state_at_version("p:e1:q1", 2)->answer == std::optional<std::string>("Edited."));
  CHECK(f.service.state_at_version("p:e1:q1", 1)->answer == std::optional<std::string>("It follows."));
  CHECK(f.service.audit_trail("p:e1:q1").size() == 4);
  CHECK(code_of([&] { f.service.audit_trail("nope"); }) == Errc::UnknownSample);
}

TEST_CASE("consensus counts distinct accepting reviewers") {
  dmtest::TempDir dir;
  ManualClock clock;
  store::SampleStore samples(dir / "store", clock);
  CurationService service(samples, clock, dir / "exports", CurationOptions{std::chrono::minutes(30), 2});
  samples.create(filtered_sample("p", 1));
  service.enqueue_samples({"p:e1:q1"});
  auto s = service.submit_decision(decision(*samples.get("p:e1:q1"), Action::accept, true, "a"));
  CHECK(s.stage == Stage::review_pending);
  s = service.submit_decision(decision(s, Action::accept, true, "a"));
  CHECK(s.stage == Stage::review_pending);
  s = service.submit_decision(decision(s, Action::accept, true, "b"));
  CHECK(s.stage == Stage::accepted);
}

TEST_CASE("decision json validation") {
  const auto d = decision(filtered_sample("p", 1), Action::edit);
  CHECK(decision_from_json(to_json(d)) == d);
  try {
    decision_from_json(json{{"sample_id", 3}, {"action", "maybe"}});
    FAIL("expected InvalidDecision");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidDecision);
    const std::string msg = e.what();
    CHECK(msg.find("sample_id") != std::string::npos);
    CHECK(msg.find("action") != std::string::npos);
  }
}

TEST_CASE("randomized decision sequences never accept without the full rubric") {
  Fixture f;
  constexpr int kSamples = 40;
  f.seed(kSamples);
  std::mt19937 rng(7);
  // Independent model of each sample: stage and version.
  std::map<std::string, std::pair<Stage, std::int64_t>> model;
  for (const auto& s : f.samples.samples()) model[s.sample_id] = {s.stage, s.version};

  for (int step = 0; step < 1500; ++step) {
    const auto id = "p:e" + std::to_string(1 + rng() % kSamples) + ":q1";
    auto& [stage, version] = model.at(id);
    ReviewDecision d;
    d.sample_id = id;
    d.reviewer_id = "r" + std::to_string(rng() % 3);
    d.q1_reasoning_type = rng() % 4 != 0;
    d.q2_clarity = rng() % 4 != 0;
    d.q3_correctness = rng() % 4 != 0;
    d.q4_density = rng() % 4 != 0;
    d.action = static_cast<Action>(rng() % 3);
    if (d.action == Action::edit && rng() % 5) d.edited_question = "Q" + std::to_string(step);
    d.base_version = rng() % 6 == 0 ? version - 1 : version;

    std::optional<Errc> expected;
    if (stage != Stage::review_pending) expected = Errc::NotReviewable;
    else if (d.base_version != version) expected = Errc::VersionConflict;
    else if (d.action == Action::accept && !d.rubric_passed()) expected = Errc::RubricViolation;
    else if (d.action == Action::edit && !d.edited_question) expected = Errc::InvalidDecision;

    try {
      const auto out = f.service.submit_decision(d);
      CHECK_FALSE(expected.has_value());
      ++version;
      if (d.action == Action::accept) stage = Stage::accepted;
      if (d.action == Action::reject) stage = Stage::rejected;
      CHECK(out.stage == stage);
      CHECK(out.version == version);
    } catch (const Error& e) {
      REQUIRE(expected.has_value());
      CHECK(e.code() == *expected);
    }
  }

  for (const auto& s : f.samples.samples()) {
    CHECK(model.at(s.sample_id) == std::make_pair(s.stage, s.version));
    if (s.stage != Stage::accepted) continue;
    bool gated = false;
    for (const auto& e : f.samples.events_for(s.sample_id)) {
      if (e.kind != "decision" || e.stage != Stage::accepted) continue;
      const auto& dec = *e.decision;
      gated = dec.at("q1_reasoning_type") == true && dec.at("q2_clarity") == true && dec.at("q3_correctness") == true &&
              dec.at("q4_density") == true && dec.at("action") == "accept";
    }
    CHECK(gated);
  }
  f.samples.flush();
  CHECK(store::SampleStore::replay(f.samples.root()) == store::SampleStore::load_snapshot(f.samples.root()));
  std::map<std::string, Sample> live;
  for (const auto& s : f.samples.samples()) live.emplace(s.sample_id, s);
  CHECK(store::SampleStore::replay(f.samples.root()) == live);
}

TEST_CASE("top_k export of 100 from 2000 accepted samples") {
  Fixture f;
  f.seed(1000, "pa");
  f.seed(1000, "pb");
  std::mt19937 rng(11);
  std::vector<std::tuple<std::int64_t, std::string, std::string, std::string>> oracle;
  for (const auto& s : f.samples.samples()) {
    auto d = decision(s, Action::accept);
    d.difficulty_rank = static_cast<std::int64_t>(1 + rng() % 400);
    f.service.submit_decision(d);
    oracle.emplace_back(*d.difficulty_rank, s.paper_id, s.expression.expr_id, s.sample_id);
  }
  std::sort(oracle.begin(), oracle.end());

  const auto ex = f.service.export_dataset("top100", SelectionPolicy::top_k_by_difficulty_rank, 100);
  REQUIRE(ex.items.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(ex.items[i].item_id == std::get<3>(oracle[i]));
  const auto again = f.service.export_dataset("top100b", SelectionPolicy::top_k_by_difficulty_rank, 100);
  CHECK(again.to_jsonl() == ex.to_jsonl());
  CHECK(f.service.load_export("top100").to_jsonl() == ex.to_jsonl());
  CHECK(f.service.export_dataset("all", SelectionPolicy::all_accepted).items.size() == 2000);
  CHECK(code_of([&] { f.service.export_dataset("top100", SelectionPolicy::all_accepted); }) == Errc::DuplicateId);
  CHECK(code_of([&] { f.service.export_dataset("x", SelectionPolicy::top_k_by_difficulty_rank); }) == Errc::ConfigError);
  CHECK(code_of([&] { f.service.export_dataset("../x", SelectionPolicy::all_accepted); }) == Errc::ConfigError);
  CHECK(code_of([&] { f.service.load_export("missing"); }) == Errc::UnknownExport);
}

TEST_CASE("nothing accepted, nothing exported") {
  Fixture f;
  f.seed(2);
  CHECK(code_of([&] { f.service.export_dataset("empty", SelectionPolicy::all_accepted); }) == Errc::NothingAccepted);
}
