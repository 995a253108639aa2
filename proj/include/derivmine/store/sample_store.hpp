#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "derivmine/core/clock.hpp"
#include "derivmine/store/sample.hpp"

namespace derivmine::store {

// One line of the append-only event log. Each event carries the full sample
// state it produced, so replaying the log needs nothing else.
struct StoreEvent {
  std::int64_t seq = 0;
  std::string at;
  std::string kind;  // created, transition, update, decision, enqueue
  std::string sample_id;
  Stage stage = Stage::extracted;
  std::int64_t version = 1;
  std::vector<std::string> transcripts;  // refs added by this event
  std::optional<json> decision;
  std::string note;
  json sample;

  bool operator==(const StoreEvent&) const = default;
};

json to_json(const StoreEvent& e);
StoreEvent event_from_json(const json& j);

struct SampleStoreOptions {
  // Rewrite snapshot.json after this many events; 0 only on flush.
  std::size_t snapshot_every = 256;
};

// Layout under root:
//   events.jsonl       append-only event log
//   transcripts.jsonl  append-only agent transcripts
//   snapshot.json      materialized current state, rewritten atomically
// Opening an existing root replays events.jsonl.
class SampleStore {
 public:
  SampleStore(std::filesystem::path root, Clock& clock, SampleStoreOptions options = {});
  ~SampleStore();

  SampleStore(const SampleStore&) = delete;
  SampleStore& operator=(const SampleStore&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }

  // Throws Error{DuplicateId}.
  void create(const Sample& s, std::vector<std::string> transcripts = {}, std::string note = {});
  // Records a new state of an existing sample. Throws Error{UnknownSample};
  // throws std::logic_error if the stage would move backwards.
  void record(const Sample& s, std::string kind, std::vector<std::string> transcripts = {},
              std::optional<json> decision = std::nullopt, std::string note = {});
  void append_transcript(const AgentTranscript& t);
  // Moves filtered samples (and refined ones flagged parked or over_filtered)
  // to review_pending with the next queue positions, in the order given.
  // Samples already queued or decided are skipped. Throws
  // Error{UnknownSample} or Error{NotReviewable} before changing anything.
  // Returns the number newly queued.
  std::size_t enqueue(const std::vector<std::string>& sample_ids);

  bool contains(const std::string& sample_id) const;
  std::optional<Sample> get(const std::string& sample_id) const;
  // Ordered by paper, expression position, query position, id.
  std::vector<Sample> samples() const;
  std::vector<StoreEvent> events() const;
  std::vector<StoreEvent> events_for(const std::string& sample_id) const;
  std::optional<AgentTranscript> transcript(const std::string& transcript_id) const;
  std::vector<AgentTranscript> transcripts() const;
  std::int64_t last_seq() const;

  json snapshot_json() const;
  void write_snapshot() const;
  // Forces buffered log lines to disk and rewrites the snapshot.
  void flush();

  // Sample states rebuilt from the event log alone.
  static std::map<std::string, Sample> replay(const std::filesystem::path& root);
  static std::map<std::string, Sample> load_snapshot(const std::filesystem::path& root);

 private:
  void append_event_locked(StoreEvent e, const Sample& s);

  std::filesystem::path root_;
  Clock& clock_;
  SampleStoreOptions options_;

  mutable std::shared_mutex mu_;
  std::map<std::string, Sample> samples_;
  std::vector<StoreEvent> events_;
  std::map<std::string, AgentTranscript> transcripts_;
  std::vector<std::string> transcript_order_;
  std::size_t since_snapshot_ = 0;
  std::int64_t next_queue_position_ = 1;
  std::ofstream event_out_;
  std::ofstream transcript_out_;
};

}  // namespace derivmine::store
