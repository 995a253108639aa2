#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>
#include <nlohmann/json.hpp>

#include "derivmine/agentflow/call.hpp"
#include "derivmine/agentflow/prompts.hpp"

namespace derivmine::evalbench {

using json = nlohmann::json;
using Rational = boost::rational<std::int64_t>;

// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& r);
double to_double(const Rational& r);
// Throws Error{RangeError} for text that is not "p" or "p/q".
Rational parse_rational(const std::string& s);

struct EvalItem {
  std::string item_id;
  std::string question;
  std::string answer;
};

// Items file: JSONL of {item_id, question, answer}; dataset exports are
// accepted as is. Throws Error{MalformedMetadata} naming the line.
std::vector<EvalItem> load_items(const std::filesystem::path& path);

struct ModelResponse {
  std::string model;
  std::string item_id;
  int response_index = 0;
  std::string text;
  // The call failed; text is empty and the response scores 0.
  bool failed = false;
  std::string error;

  json to_json() const;
  static ModelResponse from_json(const json& j);
};

enum class GraderKind { model, human };

struct GradeCard {
  std::string model;
  std::string item_id;
  int response_index = 0;
  int correctness = 0;
  int completeness = 0;
  int similarity = 0;
  GraderKind grader = GraderKind::model;
  std::string grader_id;

  Rational average() const { return Rational(correctness + completeness + similarity, 3); }
  json to_json() const;
  static GradeCard from_json(const json& j);
};

struct HumanScore {
  std::string model;
  std::string item_id;
  int response_index = 0;
  std::int64_t key_steps_total = 1;
  std::int64_t key_steps_completed = 0;
  Rational score;
  std::string grader_id;

  bool fully_correct() const { return score == Rational(1); }
  json to_json() const;
  static HumanScore from_json(const json& j);
};

// k calls to the solver with the same question. Failed calls give an empty
// response flagged failed; nothing is dropped. Throws Error{UsageError} for
// k < 1 and Error{Cancelled}.
std::vector<ModelResponse> generate_responses(const EvalItem& item, const std::string& model,
                                              const agentflow::AgentEnv& env, const agentflow::PromptSet& prompts,
                                              int k = 3);

// The last well-formed JSON object of a grader reply, checked for integer
// correctness, completeness and similarity in 0..2. Throws Error{ParseFailed}
// or Error{GradeOutOfRange}.
GradeCard parse_grade(const std::string& raw);

// An empty prediction scores 0/0/0 without a call. Throws RetriesExhausted
// when every attempt fails.
GradeCard grade_rubric(const EvalItem& item, const ModelResponse& response, const agentflow::AgentEnv& env,
                       const agentflow::PromptSet& prompts);

struct GradeFailure {
  std::string item_id;
  int response_index = 0;
  std::string error;
};

struct GradeRun {
  std::vector<GradeCard> cards;
  std::vector<GradeFailure> failures;
};

// Grades every response, `concurrency` calls at a time. Cards follow the
// input order; responses whose grading ran out of attempts are listed as
// failures. Throws Error{UnknownSample} for a response without an item.
GradeRun grade_all(const std::vector<EvalItem>& items, const std::vector<ModelResponse>& responses,
                   const agentflow::AgentEnv& env, const agentflow::PromptSet& prompts, int concurrency = 1);

// score = completed / total exactly. Throws Error{RangeError} unless
// 0 <= completed <= total and total >= 1.
HumanScore record_human_score(const std::string& item_id, int response_index, std::int64_t completed,
                              std::int64_t total, const std::string& model = {}, const std::string& grader_id = {});

// Append-only JSONL log of responses, grade cards and human scores.
class ScoreStore {
 public:
  ScoreStore() = default;
  // Loads an existing log; later appends go to the same file.
  explicit ScoreStore(std::filesystem::path path);

  void add(const ModelResponse& r);
  void add(const GradeCard& c);
  void add(const HumanScore& h);

  const std::vector<ModelResponse>& responses() const { return responses_; }
  const std::vector<GradeCard>& cards() const { return cards_; }
  const std::vector<HumanScore>& human_scores() const { return humans_; }
  std::vector<std::string> models() const;

 private:
  void append(const json& event);

  std::optional<std::filesystem::path> path_;
  std::mutex mu_;
  std::vector<ModelResponse> responses_;
  std::vector<GradeCard> cards_;
  std::vector<HumanScore> humans_;
};

struct AxisMeans {
  Rational correctness;
  Rational completeness;
  Rational similarity;
  // Mean of the per-card averages.
  Rational overall;
  std::size_t cards = 0;
};

struct BenchReport {
  std::string model_name;
  std::size_t n_items = 0;
  // Best human score per item over its responses.
  std::map<std::string, Rational> best;
  std::size_t solved_count = 0;
  Rational solved_rate;
  std::optional<AxisMeans> rubric;
  std::map<std::string, AxisMeans> rubric_by_item;

  // One summary line followed by one line per item.
  std::string to_jsonl() const;
  std::string to_table() const;
  // model,item_id,best_score,correctness,completeness,similarity,average
  std::string to_csv(bool header = true) const;
};

// Solved counts come from human scores; when none exist the items are the
// graded ones and nothing counts as solved. Throws Error{NoScores}.
BenchReport aggregate(const std::string& model_name, const std::vector<HumanScore>& human,
                      const std::vector<GradeCard>& cards);
BenchReport aggregate(const std::string& model_name, const ScoreStore& store);

}  // namespace derivmine::evalbench
