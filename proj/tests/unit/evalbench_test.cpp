#include <doctest.h>

#include <array>

#include "derivmine/agentflow/provider.hpp"
#include "derivmine/core/error.hpp"
#include "derivmine/evalbench/bench.hpp"
#include "support/support.hpp"

using namespace derivmine;
using namespace derivmine::evalbench;
using agentflow::AgentEnv;
using agentflow::MockProvider;
using agentflow::ProviderBinding;
using agentflow::ScriptEntry;
using store::AgentRole;

namespace {

ScriptEntry reply(AgentRole role, std::string key, std::string text, std::optional<int> attempt = std::nullopt) {
  ScriptEntry e;
  e.role = role;
  e.key = std::move(key);
  e.text = std::move(text);
  e.attempt = attempt;
  return e;
}

GradeCard card(const std::string& item, int idx, int c, int m, int s, const std::string& model = "m") {
  GradeCard g;
  g.model = model;
  g.item_id = item;
  g.response_index = idx;
  g.correctness = c;
  g.completeness = m;
  g.similarity = s;
  g.grader_id = "judge";
  return g;
}

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

TEST_CASE("rationals") {
  CHECK(to_string(Rational(4, 8)) == "1/2");
  CHECK(to_string(Rational(3)) == "3");
  CHECK(parse_rational("6/9") == Rational(2, 3));
  CHECK(parse_rational("-2") == Rational(-2));
  CHECK(code_of([] { parse_rational("1/0"); }) == Errc::RangeError);
  CHECK(code_of([] { parse_rational("0.5"); }) == Errc::RangeError);
  CHECK(to_double(Rational(1, 20)) == doctest::Approx(0.05));
}

TEST_CASE("grade format round trip and range rejection") {
  const auto g = parse_grade(R"({"correctness": 2, "completeness": 1, "similarity": 0})");
  CHECK(g.correctness == 2);
  CHECK(g.completeness == 1);
  CHECK(g.similarity == 0);
  const auto reparsed = parse_grade(json{{"correctness", g.correctness}, {"completeness", g.completeness},
                                         {"similarity", g.similarity}}.dump());
  CHECK(reparsed.correctness == 2);
  CHECK(reparsed.average() == Rational(1));
  CHECK(parse_grade("Reasoning {draft} ... final: {\"correctness\": 1, \"completeness\": 1, \"similarity\": 2} done")
            .similarity == 2);
  CHECK(parse_grade(R"({"correctness": 0, "completeness": 0, "similarity": 0} then {"correctness": 2, "completeness": 2, "similarity": 2})")
            .correctness == 2);
  CHECK(parse_grade(R"({"note": "a } brace", "correctness": 1, "completeness": 0, "similarity": 0})").correctness == 1);
  CHECK(code_of([] { parse_grade(R"({"correctness": 3, "completeness": 1, "similarity": 0})"); }) ==
        Errc::GradeOutOfRange);
  CHECK(code_of([] { parse_grade(R"({"correctness": -1, "completeness": 1, "similarity": 0})"); }) ==
        Errc::GradeOutOfRange);
  CHECK(code_of([] { parse_grade(R"({"correctness": 1, "completeness": 1})"); }) == Errc::ParseFailed);
  CHECK(code_of([] { parse_grade(R"({"correctness": 1.5, "completeness": 1, "similarity": 0})"); }) ==
        Errc::ParseFailed);
  CHECK(code_of([] { parse_grade("no json here"); }) == Errc::ParseFailed);
  const auto c = card("i", 2, 1, 2, 0);
  const auto back = GradeCard::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("grading retries out-of-range replies and skips empty predictions") {
  MockProvider provider({reply(AgentRole::grader, "*", R"({"correctness": 3, "completeness": 0, "similarity": 0})", 1),
                         reply(AgentRole::grader, "*", R"({"correctness": 2, "completeness": 2, "similarity": 1})", 2)});
  ProviderBinding binding;
  ManualClock clock;
  const AgentEnv env{provider, binding, clock};
  const auto prompts = agentflow::PromptSet::defaults();
  const EvalItem item{"i1", "Prove x.", "x holds."};
  ModelResponse r{"m", "i1", 0, "Since y, x.", false, {}};
  const auto g = grade_rubric(item, r, env, prompts);
  CHECK(g.correctness == 2);
  CHECK(g.similarity == 1);
  CHECK(g.model == "m");
  CHECK(provider.calls() == 2);

  r.text = "   \n";
  const auto zero = grade_rubric(item, r, env, prompts);
  CHECK(zero.correctness + zero.completeness + zero.similarity == 0);
  CHECK(provider.calls() == 2);

  MockProvider bad({reply(AgentRole::grader, "*", "I refuse.")});
  const AgentEnv bad_env{bad, binding, clock};
  r.text = "Answer";
  try {
    grade_rubric(item, r, bad_env, prompts);
    FAIL("expected ExhaustedRetries");
  } catch (const agentflow::RetriesExhausted& e) {
    CHECK(e.last_code() == Errc::ParseFailed);
    CHECK(bad.calls() == 3);
  }
  const auto run = grade_all({item}, {r, ModelResponse{"m", "i1", 1, "", true, "x"}}, bad_env, prompts, 2);
  CHECK(run.cards.size() == 1);
  CHECK(run.failures.size() == 1);
  CHECK(code_of([&] { grade_all({item}, {ModelResponse{"m", "zz", 0, "t", false, {}}}, bad_env, prompts); }) ==
        Errc::UnknownSample);
}

TEST_CASE("solver responses keep failures") {
  ScriptEntry err;
  err.role = AgentRole::solver;
  err.key = "i1#r1";
  err.error = "timeout";
  MockProvider provider({reply(AgentRole::solver, "*", "a proof"), err});
  ProviderBinding binding;
  ManualClock clock;
  const AgentEnv env{provider, binding, clock};
  const auto prompts = agentflow::PromptSet::defaults();
  const auto rs = generate_responses(EvalItem{"i1", "Q", "A"}, "m", env, prompts, 3);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0].text == "a proof");
  CHECK(rs[1].failed);
  CHECK(rs[1].text.empty());
  CHECK(rs[2].response_index == 2);
  CHECK(code_of([&] { generate_responses(EvalItem{"i1", "Q", "A"}, "m", env, prompts, 0); }) == Errc::UsageError);
}

TEST_CASE("human key-step scores") {
  const auto h = record_human_score("i", 0, 4, 8);
  CHECK(h.score == Rational(1, 2));
  CHECK_FALSE(h.fully_correct());
  CHECK(record_human_score("i", 0, 8, 8).fully_correct());
  CHECK(record_human_score("i", 0, 0, 3).score == Rational(0));
  CHECK(code_of([] { record_human_score("i", 0, 9, 8); }) == Errc::RangeError);
  CHECK(code_of([] { record_human_score("i", 0, -1, 8); }) == Errc::RangeError);
  CHECK(code_of([] { record_human_score("i", 0, 0, 0); }) == Errc::RangeError);
}

TEST_CASE("aggregate matches a hand-computed 10 x 3 oracle") {
  // completed steps per response, and the total, for items i1..i10
  const std::vector<std::pair<std::int64_t, std::array<std::int64_t, 3>>> table{
      {4, {4, 2, 0}}, {8, {4, 6, 8}}, {3, {1, 2, 0}}, {5, {0, 0, 0}}, {6, {3, 3, 2}},
      {2, {1, 2, 2}}, {7, {5, 6, 1}}, {9, {3, 6, 0}}, {10, {10, 9, 5}}, {4, {1, 3, 2}}};
  std::vector<HumanScore> human;
  for (std::size_t i = 0; i < table.size(); ++i)
    for (int r = 0; r < 3; ++r)
      human.push_back(record_human_score("i" + std::to_string(i + 1), r, table[i].second[static_cast<std::size_t>(r)],
                                         table[i].first, "m", "expert"));
  human.push_back(record_human_score("i4", 0, 5, 5, "other", "expert"));

  const std::vector<GradeCard> cards{card("i1", 0, 2, 1, 0), card("i1", 1, 1, 1, 2), card("i1", 2, 2, 2, 2, "other")};
  const auto rep = aggregate("m", human, cards);
  CHECK(rep.n_items == 10);
  const std::map<std::string, Rational> best{
      {"i1", Rational(1)},    {"i2", Rational(1)},    {"i3", Rational(2, 3)}, {"i4", Rational(0)},
      {"i5", Rational(1, 2)}, {"i6", Rational(1)},    {"i7", Rational(6, 7)}, {"i8", Rational(2, 3)},
      {"i9", Rational(1)},    {"i10", Rational(3, 4)}};
  CHECK(rep.best == best);
  CHECK(rep.solved_count == 4);
  CHECK(rep.solved_rate == Rational(2, 5));
  REQUIRE(rep.rubric);
  CHECK(rep.rubric->cards == 2);
  CHECK(rep.rubric->correctness == Rational(3, 2));
  CHECK(rep.rubric->completeness == Rational(1));
  CHECK(rep.rubric->similarity == Rational(1));
  CHECK(rep.rubric->overall == Rational(7, 6));
  CHECK(rep.rubric_by_item.at("i1").overall == Rational(7, 6));

  const auto csv = rep.to_csv();
  CHECK(csv.rfind("model,item_id,best_score,correctness,completeness,similarity,average\n", 0) == 0);
  CHECK(csv.find("m,i1,1.0000,1.5000,1.0000,1.0000,1.1667\n") != std::string::npos);
  CHECK(csv.find("m,i7,0.8571,,,,\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  const auto first = json::parse(rep.to_jsonl().substr(0, rep.to_jsonl().find('\n')));
  CHECK(first["solved_rate"] == "2/5");
  CHECK(rep.to_table().find("2/5") != std::string::npos);
}

TEST_CASE("five solved out of one hundred") {
  std::vector<HumanScore> human;
  for (int i = 0; i < 100; ++i)
    human.push_back(record_human_score("q" + std::to_string(i), 0, i % 20 == 0 ? 3 : 2, 3, "m"));
  const auto rep = aggregate("m", human, {});
  CHECK(rep.n_items == 100);
  CHECK(rep.solved_count == 5);
  CHECK(rep.solved_rate == Rational(1, 20));
  CHECK_FALSE(rep.rubric);
  CHECK(code_of([&] { aggregate("nobody", human, {}); }) == Errc::NoScores);
}

TEST_CASE("score log survives reload") {
  dmtest::TempDir dir;
  {
    ScoreStore s(dir / "m.jsonl");
    s.add(ModelResponse{"m", "i1", 0, "text", false, {}});
    s.add(card("i1", 0, 2, 1, 0));
    s.add(record_human_score("i1", 0, 1, 2, "m", "g"));
    s.add(record_human_score("i1", 0, 1, 1, "n", "g"));
  }
  const ScoreStore s(dir / "m.jsonl");
  CHECK(s.responses().size() == 1);
  CHECK(s.cards().size() == 1);
  CHECK(s.human_scores().size() == 2);
  CHECK(s.human_scores()[0].score == Rational(1, 2));
  CHECK(s.models() == std::vector<std::string>{"m", "n"});
  CHECK(aggregate("m", s).best.at("i1") == Rational(1, 2));
}

TEST_CASE("item files") {
  dmtest::TempDir dir;
  write_file_atomic(dir / "items.jsonl", "{\"item_id\":\"a\",\"question\":\"Q\",\"answer\":\"A\"}\n");
  CHECK(load_items(dir / "items.jsonl").size() == 1);
  write_file_atomic(dir / "dup.jsonl", "{\"item_id\":\"a\",\"question\":\"Q\",\"answer\":\"A\"}\n"
                                       "{\"item_id\":\"a\",\"question\":\"Q\",\"answer\":\"A\"}\n");
  CHECK(code_of([&] { load_items(dir / "dup.jsonl"); }) == Errc::DuplicateId);
  write_file_atomic(dir / "bad.jsonl", "{\"item_id\":1}\n");
  CHECK(code_of([&] { load_items(dir / "bad.jsonl"); }) == Errc::MalformedMetadata);
}
