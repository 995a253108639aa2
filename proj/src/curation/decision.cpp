#include "derivmine/curation/decision.hpp"

#include <vector>

#include "derivmine/core/error.hpp"

namespace derivmine::curation {

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::accept: return "accept";
    case Action::reject: return "reject";
    case Action::edit: return "edit";
  }
  return "reject";
}

std::optional<Action> parse_action(std::string_view s) noexcept {
  if (s == "accept") return Action::accept;
  if (s == "reject") return Action::reject;
  if (s == "edit") return Action::edit;
  return std::nullopt;
}

json to_json(const ReviewDecision& d) {
  json j{{"decision_id", d.decision_id},
         {"sample_id", d.sample_id},
         {"reviewer_id", d.reviewer_id},
         {"q1_reasoning_type", d.q1_reasoning_type},
         {"q2_clarity", d.q2_clarity},
         {"q3_correctness", d.q3_correctness},
         {"q4_density", d.q4_density},
         {"action", to_string(d.action)},
         {"note", d.note},
         {"decided_at", d.decided_at},
         {"base_version", d.base_version}};
  j["edited_question"] = d.edited_question ? json(*d.edited_question) : json(nullptr);
  j["edited_answer"] = d.edited_answer ? json(*d.edited_answer) : json(nullptr);
  j["difficulty_rank"] = d.difficulty_rank ? json(*d.difficulty_rank) : json(nullptr);
  return j;
}

ReviewDecision decision_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidDecision, "decision must be a JSON object");
  std::vector<std::string> errors;
  ReviewDecision d;
  auto str = [&](const char* key, std::string& out, bool required) {
    if (!j.contains(key) || j.at(key).is_null()) {
      if (required) errors.push_back(std::string(key) + ": required");
      return;
    }
    if (!j.at(key).is_string()) {
      errors.push_back(std::string(key) + ": must be a string");
      return;
    }
    out = j.at(key).get<std::string>();
  };
  auto opt_str = [&](const char* key, std::optional<std::string>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_string()) errors.push_back(std::string(key) + ": must be a string");
    else out = j.at(key).get<std::string>();
  };
  auto flag = [&](const char* key, bool& out) {
    if (!j.contains(key)) {
      errors.push_back(std::string(key) + ": required");
      return;
    }
    if (!j.at(key).is_boolean()) errors.push_back(std::string(key) + ": must be a boolean");
    else out = j.at(key).get<bool>();
  };
  str("decision_id", d.decision_id, false);
  str("sample_id", d.sample_id, false);
  str("reviewer_id", d.reviewer_id, true);
  flag("q1_reasoning_type", d.q1_reasoning_type);
  flag("q2_clarity", d.q2_clarity);
  flag("q3_correctness", d.q3_correctness);
  flag("q4_density", d.q4_density);
  std::string action;
  str("action", action, true);
  if (!action.empty()) {
    if (auto a = parse_action(action)) d.action = *a;
    else errors.push_back("action: must be accept, reject or edit");
  }
  opt_str("edited_question", d.edited_question);
  opt_str("edited_answer", d.edited_answer);
  str("note", d.note, false);
  str("decided_at", d.decided_at, false);
  if (!j.contains("base_version") || !j.at("base_version").is_number_integer())
    errors.push_back("base_version: required integer");
  else
    d.base_version = j.at("base_version").get<std::int64_t>();
  if (j.contains("difficulty_rank") && !j.at("difficulty_rank").is_null()) {
    if (!j.at("difficulty_rank").is_number_integer() || j.at("difficulty_rank").get<std::int64_t>() < 1)
      errors.push_back("difficulty_rank: must be a positive integer");
    else
      d.difficulty_rank = j.at("difficulty_rank").get<std::int64_t>();
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(Errc::InvalidDecision, msg);
  }
  return d;
}

}  // namespace derivmine::curation
