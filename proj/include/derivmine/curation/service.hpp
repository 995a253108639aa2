#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "derivmine/core/clock.hpp"
#include "derivmine/curation/decision.hpp"
#include "derivmine/store/sample_store.hpp"

namespace derivmine::curation {

enum class SelectionPolicy { all_accepted, top_k_by_difficulty_rank };

std::string_view to_string(SelectionPolicy p) noexcept;
std::optional<SelectionPolicy> parse_selection_policy(std::string_view s) noexcept;

struct CurationOptions {
  std::chrono::milliseconds lease{std::chrono::minutes{30}};
  // Distinct accepting reviewers needed before a sample is accepted.
  int consensus = 1;
};

struct Lease {
  std::string reviewer_id;
  TimePoint expires;
};

// A queued sample with what a reviewer needs to judge it.
struct ReviewItem {
  store::Sample sample;
  std::vector<store::AgentTranscript> transcripts;
  std::optional<Lease> lease;

  json to_json() const;
};

struct ExportItem {
  std::string item_id;  // the sample id
  std::string question;
  std::string answer;
  std::string paper_id;
  std::string expr_id;
  std::vector<std::string> decision_ids;
  std::optional<std::int64_t> difficulty_rank;

  json to_json() const;
};

struct DatasetExport {
  std::string name;
  std::string created_at;
  SelectionPolicy selection_policy = SelectionPolicy::all_accepted;
  std::optional<std::size_t> k;
  std::vector<ExportItem> items;

  json meta_json() const;
  // One item per line: item_id, question, answer, provenance.
  std::string to_jsonl() const;
};

// The review workflow over a sample store. All mutations go through the
// store's event log; leases live in memory only.
class CurationService {
 public:
  CurationService(store::SampleStore& store, Clock& clock, std::filesystem::path export_dir,
                  CurationOptions options = {});

  // Throws Error{UnknownSample} or Error{NotReviewable}.
  std::size_t enqueue_samples(const std::vector<std::string>& sample_ids);

  std::size_t queue_length() const;
  // Oldest queued sample not leased to someone else; leases it to the
  // reviewer. A reviewer asking again gets its own leased sample back.
  // Throws Error{QueueEmpty}.
  ReviewItem next_for_review(const std::string& reviewer_id, const std::optional<std::string>& paper_id = {});
  ReviewItem get(const std::string& sample_id) const;

  // Returns the sample after the decision. Throws Error{UnknownSample},
  // Error{NotReviewable}, Error{VersionConflict}, Error{RubricViolation} or
  // Error{InvalidDecision}.
  store::Sample submit_decision(ReviewDecision decision);

  // Throws Error{NothingAccepted}, Error{DuplicateId} for an existing name,
  // Error{ConfigError} for a bad name or k.
  DatasetExport export_dataset(const std::string& name, SelectionPolicy policy, std::optional<std::size_t> k = {});
  // Throws Error{UnknownExport}.
  DatasetExport load_export(const std::string& name) const;

  // Every event of the sample in log order. Throws Error{UnknownSample}.
  std::vector<store::StoreEvent> audit_trail(const std::string& sample_id) const;
  // State of the sample when it reached the given version.
  std::optional<store::Sample> state_at_version(const std::string& sample_id, std::int64_t version) const;

  std::optional<Lease> lease_of(const std::string& sample_id) const;

 private:
  bool leased_by_other_locked(const std::string& sample_id, const std::string& reviewer_id) const;
  std::vector<ReviewDecision> decisions_of(const std::string& sample_id) const;

  store::SampleStore& store_;
  Clock& clock_;
  std::filesystem::path export_dir_;
  CurationOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, Lease> leases_;
};

// Deterministic export order: difficulty rank ascending (unranked last),
// then paper_id, expr_id and sample id.
void order_by_difficulty(std::vector<ExportItem>& items);

}  // namespace derivmine::curation
