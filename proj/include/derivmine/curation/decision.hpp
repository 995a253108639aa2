#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace derivmine::curation {

using json = nlohmann::json;

enum class Action { accept, reject, edit };

std::string_view to_string(Action a) noexcept;
std::optional<Action> parse_action(std::string_view s) noexcept;

struct ReviewDecision {
  std::string decision_id;  // "<sample_id>@v<base_version>", set on submission
  std::string sample_id;
  std::string reviewer_id;
  bool q1_reasoning_type = false;
  bool q2_clarity = false;
  bool q3_correctness = false;
  bool q4_density = false;
  Action action = Action::reject;
  std::optional<std::string> edited_question;
  std::optional<std::string> edited_answer;
  std::string note;
  std::string decided_at;  // set on submission
  std::int64_t base_version = 0;
  // 1 is the hardest; used by top-k exports.
  std::optional<std::int64_t> difficulty_rank;

  bool rubric_passed() const noexcept { return q1_reasoning_type && q2_clarity && q3_correctness && q4_density; }

  bool operator==(const ReviewDecision&) const = default;
};

json to_json(const ReviewDecision& d);
// Throws Error{InvalidDecision} naming every malformed field.
ReviewDecision decision_from_json(const json& j);

}  // namespace derivmine::curation
