#pragma once

#include <filesystem>
#include <memory>

#include "derivmine/agentflow/pipeline.hpp"
#include "derivmine/agentflow/provider.hpp"
#include "derivmine/corpus/filter.hpp"
#include "derivmine/corpus/markers.hpp"
#include "derivmine/corpus/store.hpp"
#include "support/support.hpp"

namespace dmtest {

inline std::filesystem::path dpo_dir() { return fixtures() / "dpo"; }

// Ingests the DPO fixture bundle into root and returns the filtered record.
inline derivmine::corpus::PaperRecord dpo_paper(const std::filesystem::path& root) {
  using namespace derivmine;
  corpus::CorpusStore store(root);
  auto meta = nlohmann::json::parse(read_file(dpo_dir() / "meta.json"));
  auto rec = corpus::ingest_paper(store, dpo_dir() / meta.at("bundle").get<std::string>(), meta,
                                  corpus::default_marker_lexicon());
  corpus::apply_filter(rec, corpus::FilterPolicy{});
  store.update(rec);
  return rec;
}

// One generation run over the DPO fixture under the scripted mock.
struct RunOutput {
  derivmine::agentflow::PipelineReport report;
  std::string samples;      // review_pending samples, one JSON per line
  std::string transcripts;  // their transcripts, in reference order
  std::vector<derivmine::store::Sample> all;
};

inline RunOutput run_dpo(std::size_t concurrency = 1) {
  using namespace derivmine;
  using namespace derivmine::agentflow;
  TempDir dir;
  const auto paper = dpo_paper(dir / "corpus");
  auto provider = MockProvider::from_file(dpo_dir() / "mock_script.jsonl");
  ProviderBinding binding;
  binding.script_path = (dpo_dir() / "mock_script.jsonl").string();
  ManualClock clock;
  store::SampleStore samples(dir / "store", clock);
  const auto prompts = PromptSet::defaults();
  Pipeline pipeline(provider, binding, prompts, samples, clock, PipelineOptions{concurrency, {}});
  RunOutput out;
  out.report = pipeline.run(paper);
  out.all = samples.samples();
  for (const auto& s : out.all) {
    if (s.stage != store::Stage::review_pending) continue;
    out.samples += store::to_json(s).dump() + "\n";
    for (const auto& ref : s.transcripts) out.transcripts += store::to_json(*samples.transcript(ref)).dump() + "\n";
  }
  return out;
}

}  // namespace dmtest
