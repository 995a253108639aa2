#include "derivmine/store/sample.hpp"

#include <array>

#include "derivmine/core/error.hpp"

namespace derivmine::store {

namespace {

constexpr std::array<std::string_view, 9> kStages{"extracted", "drafted",        "retrieved", "contextualized", "refined",
                                                  "filtered",  "review_pending", "accepted",  "rejected"};
constexpr std::array<std::string_view, 7> kRoles{"query_draft",   "answer_retriever", "context_collector",
                                                 "question_refiner", "answer_filter", "solver", "grader"};
constexpr std::array<std::string_view, 3> kOutcomes{"ok", "parse_failed", "provider_error"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) noexcept {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  return std::nullopt;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Stage s) noexcept { return kStages[static_cast<std::size_t>(s)]; }
std::optional<Stage> parse_stage(std::string_view s) noexcept { return lookup<Stage>(kStages, s); }
bool is_terminal(Stage s) noexcept { return s == Stage::accepted || s == Stage::rejected; }

std::string_view to_string(AgentRole r) noexcept { return kRoles[static_cast<std::size_t>(r)]; }
std::optional<AgentRole> parse_agent_role(std::string_view s) noexcept { return lookup<AgentRole>(kRoles, s); }

std::string_view to_string(Outcome o) noexcept { return kOutcomes[static_cast<std::size_t>(o)]; }
std::optional<Outcome> parse_outcome(std::string_view s) noexcept { return lookup<Outcome>(kOutcomes, s); }

std::string transcript_id(std::string_view key, AgentRole role, int attempt) {
  return std::string(key) + "/" + std::string(to_string(role)) + "/" + std::to_string(attempt);
}

json to_json(const AgentTranscript& t) {
  json j{{"transcript_id", t.transcript_id}, {"key", t.key},
         {"agent_role", to_string(t.agent_role)}, {"prompt_text", t.prompt_text},
         {"raw_response", t.raw_response},   {"attempt", t.attempt},
         {"outcome", to_string(t.outcome)},  {"error_code", opt(t.error_code)},
         {"error_message", opt(t.error_message)}, {"provider_name", t.provider_name}};
  j["token_counts"] =
      t.token_counts ? json{{"prompt", t.token_counts->prompt}, {"completion", t.token_counts->completion}} : json(nullptr);
  return j;
}

AgentTranscript transcript_from_json(const json& j) {
  AgentTranscript t;
  t.transcript_id = j.at("transcript_id").get<std::string>();
  t.key = j.at("key").get<std::string>();
  const auto role = parse_agent_role(j.at("agent_role").get<std::string>());
  const auto outcome = parse_outcome(j.at("outcome").get<std::string>());
  if (!role || !outcome) throw Error(Errc::SchemaViolation, "bad transcript " + t.transcript_id);
  t.agent_role = *role;
  t.outcome = *outcome;
  t.prompt_text = j.at("prompt_text").get<std::string>();
  t.raw_response = j.at("raw_response").get<std::string>();
  t.attempt = j.at("attempt").get<int>();
  t.error_code = get_opt<std::string>(j, "error_code");
  t.error_message = get_opt<std::string>(j, "error_message");
  t.provider_name = j.value("provider_name", "");
  if (j.contains("token_counts") && j.at("token_counts").is_object())
    t.token_counts = TokenCounts{j["token_counts"].value("prompt", std::int64_t{0}),
                                 j["token_counts"].value("completion", std::int64_t{0})};
  return t;
}

json to_json(const ContextSnippet& s) { return json{{"text", s.text}, {"locator", s.locator}}; }

ContextSnippet snippet_from_json(const json& j) {
  return ContextSnippet{j.at("text").get<std::string>(), j.value("locator", "")};
}

json to_json(const Sample& s) {
  json evidence = nullptr;
  if (s.evidence) {
    evidence = json::array();
    for (const auto& e : *s.evidence) evidence.push_back(to_json(e));
  }
  return json{{"sample_id", s.sample_id},
              {"paper_id", s.paper_id},
              {"expression", texmath::to_json(s.expression)},
              {"expression_index", s.expression_index},
              {"query_index", s.query_index},
              {"query", opt(s.query)},
              {"whole_label", opt(s.whole_label)},
              {"evidence", evidence},
              {"question", opt(s.question)},
              {"answer", opt(s.answer)},
              {"stage", to_string(s.stage)},
              {"transcripts", s.transcripts},
              {"version", s.version},
              {"queue_position", opt(s.queue_position)},
              {"reject_reason", opt(s.reject_reason)},
              {"over_filtered", s.over_filtered},
              {"parked", s.parked},
              {"self_containment_report", s.self_containment_report ? *s.self_containment_report : json(nullptr)}};
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.paper_id = j.at("paper_id").get<std::string>();
  s.expression = texmath::expression_from_json(j.at("expression"));
  s.expression_index = j.value("expression_index", std::int64_t{0});
  s.query_index = j.value("query_index", std::int64_t{0});
  s.query = get_opt<std::string>(j, "query");
  s.whole_label = get_opt<std::string>(j, "whole_label");
  if (j.contains("evidence") && j.at("evidence").is_array()) {
    s.evidence.emplace();
    for (const auto& e : j.at("evidence")) s.evidence->push_back(snippet_from_json(e));
  }
  s.question = get_opt<std::string>(j, "question");
  s.answer = get_opt<std::string>(j, "answer");
  const auto stage = parse_stage(j.at("stage").get<std::string>());
  if (!stage) throw Error(Errc::SchemaViolation, "bad stage in sample " + s.sample_id);
  s.stage = *stage;
  s.transcripts = j.value("transcripts", std::vector<std::string>{});
  s.version = j.value("version", std::int64_t{1});
  s.queue_position = get_opt<std::int64_t>(j, "queue_position");
  s.reject_reason = get_opt<std::string>(j, "reject_reason");
  s.over_filtered = j.value("over_filtered", false);
  s.parked = j.value("parked", false);
  if (j.contains("self_containment_report") && !j.at("self_containment_report").is_null())
    s.self_containment_report = j.at("self_containment_report");
  return s;
}

std::vector<std::string> stage_violations(const Sample& s) {
  std::vector<std::string> out;
  if (s.stage == Stage::rejected) return out;
  auto need = [&](bool present, Stage from, const char* field) {
    if (s.stage >= from && !present)
      out.push_back(std::string(field) + " missing at stage " + std::string(to_string(s.stage)));
  };
  need(s.query.has_value(), Stage::drafted, "query");
  need(s.whole_label.has_value(), Stage::retrieved, "whole_label");
  need(s.evidence.has_value(), Stage::contextualized, "evidence");
  need(s.question.has_value(), Stage::refined, "question");
  need(s.answer.has_value(), Stage::refined, "answer");
  return out;
}

}  // namespace derivmine::store
