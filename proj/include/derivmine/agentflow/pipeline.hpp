#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/agentflow/call.hpp"
#include "derivmine/agentflow/prompts.hpp"
#include "derivmine/corpus/types.hpp"
#include "derivmine/store/sample_store.hpp"
#include "derivmine/texmath/extract.hpp"

namespace derivmine::corpus {
class CorpusStore;
}

namespace derivmine::agentflow {

// Reject reasons stored on samples.
inline constexpr const char* kNoAnswerInPaper = "no_answer_in_paper";
inline constexpr const char* kExhaustedRetries = "exhausted_retries";

struct PipelineOptions {
  // Expressions processed at once; bounds concurrent provider calls.
  std::size_t concurrency = 1;
  texmath::ExtractOptions extract{};
};

struct PipelineReport {
  std::string paper_id;
  std::size_t expressions = 0;
  std::size_t samples = 0;
  std::map<std::string, std::size_t> by_stage;
  std::map<std::string, std::size_t> reject_reasons;
  std::size_t parked = 0;
  std::size_t over_filtered = 0;
  std::size_t enqueued = 0;
  std::size_t resumed = 0;
  std::size_t provider_calls = 0;
  std::size_t extraction_diagnostics = 0;

  nlohmann::json to_json() const;
};

// The five generation stages over one sample store. Each stage records the
// new sample state and returns it; a failed stage marks the sample rejected
// instead of throwing. Cancelled and PayloadTooLarge propagate.
class Pipeline {
 public:
  Pipeline(Provider& provider, const ProviderBinding& binding, const PromptSet& prompts, store::SampleStore& store,
           Clock& clock, PipelineOptions options = {}, const CancelToken* cancel = nullptr);

  // Samples "<paper>:<expr_id>:q<k>" at stage drafted, one per parsed query.
  // When drafting is exhausted a rejected placeholder "<paper>:<expr_id>:q0"
  // carries the transcripts.
  std::vector<store::Sample> draft_queries(const corpus::PaperRecord& paper, const texmath::MathExpression& expression,
                                           std::int64_t expression_index);
  store::Sample retrieve_answer(const corpus::PaperRecord& paper, store::Sample sample);
  store::Sample collect_context(const corpus::PaperRecord& paper, store::Sample sample);
  store::Sample refine_question(store::Sample sample);
  store::Sample filter_answer(store::Sample sample);

  // Runs the remaining stages of one sample, stopping at filtered (or at
  // refined when parked or over-filtered) or rejected.
  store::Sample advance(const corpus::PaperRecord& paper, store::Sample sample);

  // Extract, draft, retrieve, collect, refine, filter, then enqueue for
  // review. Samples already in the store are resumed from their stage.
  // Throws Error{PaperNotAccepted} unless the paper carries an accepted
  // verdict.
  PipelineReport run(const corpus::PaperRecord& paper);

  // Checks used on provider responses; exposed for contract tests.
  static nlohmann::json check_draft(const std::string& raw, const texmath::MathExpression& expression);
  static nlohmann::json check_retrieval(const std::string& raw, const texmath::MathExpression& expression,
                                        const std::string& query);
  static nlohmann::json check_context(const std::string& raw);
  static nlohmann::json check_refinement(const std::string& raw, const texmath::MathExpression& expression);
  static nlohmann::json check_filter(const std::string& raw);

 private:
  AgentEnv env() const;
  store::Sample reject(store::Sample s, const std::string& reason, const std::vector<std::string>& refs,
                       const std::string& note);

  Provider& provider_;
  const ProviderBinding& binding_;
  const PromptSet& prompts_;
  store::SampleStore& store_;
  Clock& clock_;
  PipelineOptions options_;
  const CancelToken* cancel_;
};

// Source files the extractor reads: .tex/.ltx when present, else all.
std::vector<texmath::SourceText> latex_sources(const corpus::PaperRecord& paper);

// Loads the paper from the corpus and runs the pipeline on it. Throws
// Error{UnknownPaper} or Error{PaperNotAccepted}.
PipelineReport run_pipeline(const corpus::CorpusStore& corpus, const std::string& paper_id, Pipeline& pipeline);

}  // namespace derivmine::agentflow
