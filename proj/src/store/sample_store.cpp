#include "derivmine/store/sample_store.hpp"

#include <algorithm>
#include <stdexcept>

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEvents = "events.jsonl";
constexpr const char* kTranscripts = "transcripts.jsonl";
constexpr const char* kSnapshot = "snapshot.json";

bool sample_order(const Sample& a, const Sample& b) {
  return std::tie(a.paper_id, a.expression_index, a.query_index, a.sample_id) <
         std::tie(b.paper_id, b.expression_index, b.query_index, b.sample_id);
}

std::ofstream open_append(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::IoError, "cannot append to " + p.string());
  return out;
}

void write_line(std::ofstream& out, const json& j, const fs::path& p) {
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoError, "short append to " + p.string());
}

}  // namespace

json to_json(const StoreEvent& e) {
  json j{{"seq", e.seq},       {"at", e.at},           {"kind", e.kind},
         {"sample_id", e.sample_id}, {"stage", to_string(e.stage)}, {"version", e.version},
         {"transcripts", e.transcripts}, {"note", e.note},  {"sample", e.sample}};
  j["decision"] = e.decision ? *e.decision : json(nullptr);
  return j;
}

StoreEvent event_from_json(const json& j) {
  StoreEvent e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.at = j.at("at").get<std::string>();
  e.kind = j.at("kind").get<std::string>();
  e.sample_id = j.at("sample_id").get<std::string>();
  e.stage = parse_stage(j.at("stage").get<std::string>()).value_or(Stage::extracted);
  e.version = j.at("version").get<std::int64_t>();
  e.transcripts = j.value("transcripts", std::vector<std::string>{});
  if (j.contains("decision") && !j.at("decision").is_null()) e.decision = j.at("decision");
  e.note = j.value("note", "");
  e.sample = j.at("sample");
  return e;
}

SampleStore::SampleStore(fs::path root, Clock& clock, SampleStoreOptions options)
    : root_(std::move(root)), clock_(clock), options_(options) {
  fs::create_directories(root_);
  if (fs::exists(root_ / kEvents)) {
    for (const auto& line : read_jsonl(root_ / kEvents)) {
      auto e = event_from_json(line);
      auto s = sample_from_json(e.sample);
      if (s.queue_position) next_queue_position_ = std::max(next_queue_position_, *s.queue_position + 1);
      samples_[e.sample_id] = std::move(s);
      events_.push_back(std::move(e));
    }
  }
  if (fs::exists(root_ / kTranscripts)) {
    for (const auto& line : read_jsonl(root_ / kTranscripts)) {
      auto t = transcript_from_json(line);
      if (!transcripts_.contains(t.transcript_id)) transcript_order_.push_back(t.transcript_id);
      transcripts_[t.transcript_id] = std::move(t);
    }
  }
  event_out_ = open_append(root_ / kEvents);
  transcript_out_ = open_append(root_ / kTranscripts);
}

SampleStore::~SampleStore() {
  try {
    flush();
  } catch (...) {
  }
}

void SampleStore::append_event_locked(StoreEvent e, const Sample& s) {
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.at = format_timestamp(clock_.now());
  e.sample_id = s.sample_id;
  e.stage = s.stage;
  e.version = s.version;
  e.sample = to_json(s);
  write_line(event_out_, to_json(e), root_ / kEvents);
  samples_[s.sample_id] = s;
  if (s.queue_position) next_queue_position_ = std::max(next_queue_position_, *s.queue_position + 1);
  events_.push_back(std::move(e));
  if (options_.snapshot_every > 0 && ++since_snapshot_ >= options_.snapshot_every) {
    since_snapshot_ = 0;
    write_file_atomic(root_ / kSnapshot, snapshot_json().dump());
  }
}

void SampleStore::create(const Sample& s, std::vector<std::string> transcripts, std::string note) {
  std::unique_lock lock(mu_);
  if (samples_.contains(s.sample_id)) throw Error(Errc::DuplicateId, "sample " + s.sample_id + " already exists");
  StoreEvent e;
  e.kind = "created";
  e.transcripts = std::move(transcripts);
  e.note = std::move(note);
  append_event_locked(std::move(e), s);
}

void SampleStore::record(const Sample& s, std::string kind, std::vector<std::string> transcripts,
                         std::optional<json> decision, std::string note) {
  std::unique_lock lock(mu_);
  const auto it = samples_.find(s.sample_id);
  if (it == samples_.end()) throw Error(Errc::UnknownSample, "unknown sample " + s.sample_id);
  if (s.stage < it->second.stage)
    throw std::logic_error("sample " + s.sample_id + " cannot move from " + std::string(to_string(it->second.stage)) +
                           " back to " + std::string(to_string(s.stage)));
  StoreEvent e;
  e.kind = std::move(kind);
  e.transcripts = std::move(transcripts);
  e.decision = std::move(decision);
  e.note = std::move(note);
  append_event_locked(std::move(e), s);
}

void SampleStore::append_transcript(const AgentTranscript& t) {
  std::unique_lock lock(mu_);
  write_line(transcript_out_, to_json(t), root_ / kTranscripts);
  if (!transcripts_.contains(t.transcript_id)) transcript_order_.push_back(t.transcript_id);
  transcripts_[t.transcript_id] = t;
}

std::size_t SampleStore::enqueue(const std::vector<std::string>& sample_ids) {
  std::unique_lock lock(mu_);
  auto queueable = [](const Sample& s) {
    return s.stage == Stage::filtered || (s.stage == Stage::refined && (s.parked || s.over_filtered));
  };
  for (const auto& id : sample_ids) {
    const auto it = samples_.find(id);
    if (it == samples_.end()) throw Error(Errc::UnknownSample, "unknown sample " + id);
    const auto& s = it->second;
    if (s.stage < Stage::review_pending && !queueable(s))
      throw Error(Errc::NotReviewable, "sample " + id + " is at stage " + std::string(to_string(s.stage)));
  }
  std::size_t added = 0;
  for (const auto& id : sample_ids) {
    Sample s = samples_.at(id);
    if (!queueable(s)) continue;
    s.stage = Stage::review_pending;
    s.queue_position = next_queue_position_++;
    StoreEvent e;
    e.kind = "enqueue";
    append_event_locked(std::move(e), s);
    ++added;
  }
  return added;
}

bool SampleStore::contains(const std::string& sample_id) const {
  std::shared_lock lock(mu_);
  return samples_.contains(sample_id);
}

std::optional<Sample> SampleStore::get(const std::string& sample_id) const {
  std::shared_lock lock(mu_);
  const auto it = samples_.find(sample_id);
  if (it == samples_.end()) return std::nullopt;
  return it->second;
}

std::vector<Sample> SampleStore::samples() const {
  std::vector<Sample> out;
  {
    std::shared_lock lock(mu_);
    out.reserve(samples_.size());
    for (const auto& [id, s] : samples_) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), sample_order);
  return out;
}

std::vector<StoreEvent> SampleStore::events() const {
  std::shared_lock lock(mu_);
  return events_;
}

std::vector<StoreEvent> SampleStore::events_for(const std::string& sample_id) const {
  std::shared_lock lock(mu_);
  std::vector<StoreEvent> out;
  for (const auto& e : events_)
    if (e.sample_id == sample_id) out.push_back(e);
  return out;
}

std::optional<AgentTranscript> SampleStore::transcript(const std::string& transcript_id) const {
  std::shared_lock lock(mu_);
  const auto it = transcripts_.find(transcript_id);
  if (it == transcripts_.end()) return std::nullopt;
  return it->second;
}

std::vector<AgentTranscript> SampleStore::transcripts() const {
  std::shared_lock lock(mu_);
  std::vector<AgentTranscript> out;
  out.reserve(transcript_order_.size());
  for (const auto& id : transcript_order_) out.push_back(transcripts_.at(id));
  return out;
}

std::int64_t SampleStore::last_seq() const {
  std::shared_lock lock(mu_);
  return events_.empty() ? 0 : events_.back().seq;
}

json SampleStore::snapshot_json() const {
  json samples = json::object();
  for (const auto& [id, s] : samples_) samples[id] = to_json(s);
  return json{{"seq", events_.empty() ? 0 : events_.back().seq}, {"samples", samples}};
}

void SampleStore::write_snapshot() const {
  std::shared_lock lock(mu_);
  write_file_atomic(root_ / kSnapshot, snapshot_json().dump());
}

void SampleStore::flush() {
  std::unique_lock lock(mu_);
  event_out_.flush();
  transcript_out_.flush();
  since_snapshot_ = 0;
  write_file_atomic(root_ / kSnapshot, snapshot_json().dump());
}

std::map<std::string, Sample> SampleStore::replay(const fs::path& root) {
  std::map<std::string, Sample> out;
  if (!fs::exists(root / kEvents)) return out;
  for (const auto& line : read_jsonl(root / kEvents)) {
    const auto e = event_from_json(line);
    out[e.sample_id] = sample_from_json(e.sample);
  }
  return out;
}

std::map<std::string, Sample> SampleStore::load_snapshot(const fs::path& root) {
  std::map<std::string, Sample> out;
  if (!fs::exists(root / kSnapshot)) return out;
  const auto j = json::parse(read_file(root / kSnapshot));
  for (const auto& [id, s] : j.at("samples").items()) out[id] = sample_from_json(s);
  return out;
}

}  // namespace derivmine::store
