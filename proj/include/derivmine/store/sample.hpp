#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/texmath/extract.hpp"

namespace derivmine::store {

using json = nlohmann::json;

// Listed in pipeline order; a sample only ever moves forward.
enum class Stage {
  extracted,
  drafted,
  retrieved,
  contextualized,
  refined,
  filtered,
  review_pending,
  accepted,
  rejected,
};

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;
bool is_terminal(Stage s) noexcept;

enum class AgentRole {
  query_draft,
  answer_retriever,
  context_collector,
  question_refiner,
  answer_filter,
  solver,
  grader,
};

std::string_view to_string(AgentRole r) noexcept;
std::optional<AgentRole> parse_agent_role(std::string_view s) noexcept;

enum class Outcome { ok, parse_failed, provider_error };

std::string_view to_string(Outcome o) noexcept;
std::optional<Outcome> parse_outcome(std::string_view s) noexcept;

struct TokenCounts {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;

  bool operator==(const TokenCounts&) const = default;
};

struct AgentTranscript {
  std::string transcript_id;  // "<key>/<role>/<attempt>"
  std::string key;            // sample id, or the draft unit / eval item it was made for
  AgentRole agent_role = AgentRole::query_draft;
  std::string prompt_text;
  std::string raw_response;
  int attempt = 1;
  Outcome outcome = Outcome::ok;
  // Error name and message for failed attempts.
  std::optional<std::string> error_code;
  std::optional<std::string> error_message;
  std::string provider_name;
  std::optional<TokenCounts> token_counts;

  bool operator==(const AgentTranscript&) const = default;
};

std::string transcript_id(std::string_view key, AgentRole role, int attempt);

struct ContextSnippet {
  std::string text;
  std::string locator;

  bool operator==(const ContextSnippet&) const = default;
};

struct Sample {
  std::string sample_id;
  std::string paper_id;
  texmath::MathExpression expression;
  // Ordering key: position of the expression in the paper, then of the query.
  std::int64_t expression_index = 0;
  std::int64_t query_index = 0;

  std::optional<std::string> query;
  std::optional<std::string> whole_label;
  std::optional<std::vector<ContextSnippet>> evidence;
  std::optional<std::string> question;
  std::optional<std::string> answer;

  Stage stage = Stage::extracted;
  std::vector<std::string> transcripts;

  // Bumped by every review decision.
  std::int64_t version = 1;
  // Position in the review queue; assigned when the sample enters review.
  std::optional<std::int64_t> queue_position;

  std::optional<std::string> reject_reason;
  // The answer filter removed something needed; the pre-filter answer was kept.
  bool over_filtered = false;
  // Refinement never produced a self-contained pair; sent to review with the report.
  bool parked = false;
  std::optional<json> self_containment_report;

  bool operator==(const Sample&) const = default;
};

json to_json(const AgentTranscript& t);
AgentTranscript transcript_from_json(const json& j);
json to_json(const ContextSnippet& s);
ContextSnippet snippet_from_json(const json& j);
json to_json(const Sample& s);
Sample sample_from_json(const json& j);

// Field requirements per stage: query from drafted, whole_label from
// retrieved, evidence from contextualized, question and answer from refined.
// Rejected samples are exempt. Returns the violations.
std::vector<std::string> stage_violations(const Sample& s);

}  // namespace derivmine::store
