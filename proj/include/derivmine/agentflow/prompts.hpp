#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "derivmine/store/sample.hpp"
#include "derivmine/texmath/extract.hpp"

namespace derivmine::agentflow {

namespace detail {
struct EmbeddedPrompt {
  std::string_view role;
  bool canonical;
  std::string_view text;
};
const std::vector<EmbeddedPrompt>& embedded_prompts();
}  // namespace detail

struct PromptTemplate {
  std::string role;  // an agent role name, or "extractor"
  std::string text;
  // true for texts shipped verbatim from the method description.
  bool canonical = false;
  std::string source = "embedded";
};

class PromptSet {
 public:
  static PromptSet defaults();

  // Replaces templates with file contents. Throws Error{ConfigError} for an
  // unknown role or unreadable file. Overridden templates are non-canonical.
  void override_from(const std::map<std::string, std::filesystem::path>& files);
  const PromptTemplate& get(std::string_view role) const;
  std::vector<std::string> roles() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// The paper framing used by query_draft and answer_retriever records where
// the body sits so callers can check it was passed whole.
struct RenderedPrompt {
  std::string text;
  std::size_t paper_offset = std::string::npos;
  std::size_t paper_length = 0;
};

// {{name}} placeholders; values are inserted literally. Throws
// Error{ConfigError} for a placeholder without a value.
std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string>& values);

// {"<kind>": "<latex>"}; the dataset line handed to the first two agents.
nlohmann::json dataset_record(const texmath::MathExpression& e);

RenderedPrompt render_query_draft(const PromptSet& prompts, std::string_view paper,
                                  const texmath::MathExpression& expression);
RenderedPrompt render_answer_retriever(const PromptSet& prompts, std::string_view paper,
                                       const texmath::MathExpression& expression, std::string_view query);
RenderedPrompt render_context_collector(const PromptSet& prompts, std::string_view paper, std::string_view query,
                                        std::string_view whole_label, const std::vector<std::string>& undefined);
std::string render_question_refiner(const PromptSet& prompts, std::string_view query, std::string_view whole_label,
                                    const std::vector<store::ContextSnippet>& evidence);
std::string render_answer_filter(const PromptSet& prompts, std::string_view question, std::string_view answer);
std::string render_solver(const PromptSet& prompts, std::string_view question);
// The grader text is kept byte for byte; the three slots follow it.
std::string render_grader(const PromptSet& prompts, std::string_view problem, std::string_view ground_truth,
                          std::string_view solution);

}  // namespace derivmine::agentflow
