#include "derivmine/corpus/store.hpp"

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"
#include "derivmine/corpus/bundle.hpp"
#include "derivmine/corpus/markers.hpp"

namespace derivmine::corpus {

namespace fs = std::filesystem;

namespace {

constexpr const char* kIndexFile = "corpus.jsonl";

json index_line(const PaperRecord& r) {
  json files = json::array();
  std::size_t offset = 0;
  for (const auto& f : r.source_files) {
    files.push_back({{"path", f.path}, {"offset", offset}, {"length", f.text.size()}});
    offset += f.text.size() + 1;
  }
  return json{{"paper_id", r.paper_id},
              {"title", r.title},
              {"published_on", r.published_on.to_string()},
              {"venue", r.venue},
              {"review_score_class", to_string(r.review_score_class)},
              {"source_files", files},
              {"body_bytes", r.body_text.size()},
              {"marker_profile", to_json(r.marker_profile)},
              {"verdict", r.verdict ? to_json(*r.verdict) : json(nullptr)}};
}

PaperRecord record_from_line(const json& j, std::string body) {
  PaperRecord r;
  r.paper_id = j.at("paper_id").get<std::string>();
  r.title = j.value("title", "");
  r.published_on = Date::parse(j.at("published_on").get<std::string>()).value_or(Date{});
  r.venue = j.value("venue", "");
  r.review_score_class =
      parse_review_score_class(j.value("review_score_class", "unknown")).value_or(ReviewScoreClass::unknown);
  r.marker_profile = marker_profile_from_json(j.at("marker_profile"));
  if (j.contains("verdict") && !j.at("verdict").is_null()) r.verdict = verdict_from_json(j.at("verdict"));
  for (const auto& f : j.at("source_files")) {
    const auto off = f.at("offset").get<std::size_t>();
    const auto len = f.at("length").get<std::size_t>();
    if (off + len > body.size()) throw Error(Errc::IoError, "body of " + r.paper_id + " is shorter than its index");
    r.source_files.push_back({f.at("path").get<std::string>(), body.substr(off, len)});
  }
  r.body_text = std::move(body);
  return r;
}

}  // namespace

CorpusStore::CorpusStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "bodies");
  const auto index = root_ / kIndexFile;
  if (!fs::exists(index)) return;
  for (auto& line : read_jsonl(index)) {
    auto id = line.at("paper_id").get<std::string>();
    index_[id] = IndexEntry{std::move(line)};
  }
}

fs::path CorpusStore::body_path(const std::string& paper_id) const {
  return root_ / "bodies" / (safe_file_stem(paper_id) + ".txt");
}

void CorpusStore::persist_index_locked() const {
  std::string out;
  for (const auto& [id, entry] : index_) {
    out += entry.line.dump();
    out += '\n';
  }
  write_file_atomic(root_ / kIndexFile, out);
}

void CorpusStore::insert(const PaperRecord& record) {
  std::unique_lock lock(mu_);
  if (index_.contains(record.paper_id)) throw Error(Errc::DuplicateId, "paper_id already stored: " + record.paper_id);
  write_file_atomic(body_path(record.paper_id), record.body_text);
  index_[record.paper_id] = IndexEntry{index_line(record)};
  persist_index_locked();
}

void CorpusStore::update(const PaperRecord& record) {
  std::unique_lock lock(mu_);
  auto it = index_.find(record.paper_id);
  if (it == index_.end()) throw Error(Errc::UnknownPaper, record.paper_id);
  it->second.line = index_line(record);
  persist_index_locked();
}

bool CorpusStore::contains(const std::string& paper_id) const {
  std::shared_lock lock(mu_);
  return index_.contains(paper_id);
}

std::optional<PaperRecord> CorpusStore::get(const std::string& paper_id) const {
  json line;
  {
    std::shared_lock lock(mu_);
    auto it = index_.find(paper_id);
    if (it == index_.end()) return std::nullopt;
    line = it->second.line;
  }
  return record_from_line(line, read_file(body_path(paper_id)));
}

std::vector<std::string> CorpusStore::ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : index_) out.push_back(id);
  return out;
}

PaperRecord make_record(const PaperMetadata& meta, std::vector<SourceFile> files, const std::set<std::string>& lexicon) {
  PaperRecord r;
  r.paper_id = meta.paper_id;
  r.title = meta.title;
  r.published_on = meta.published_on;
  r.venue = meta.venue;
  r.review_score_class = meta.review_score_class;
  r.source_files = std::move(files);
  r.body_text = join_sources(r.source_files);
  r.marker_profile = count_markers(r.body_text, lexicon);
  return r;
}

PaperRecord ingest_paper(CorpusStore& store, const fs::path& bundle, const json& metadata,
                         const std::set<std::string>& lexicon) {
  const auto meta = PaperMetadata::from_json(metadata);
  if (store.contains(meta.paper_id)) throw Error(Errc::DuplicateId, "paper_id already stored: " + meta.paper_id);
  auto record = make_record(meta, load_bundle(bundle), lexicon);
  store.insert(record);
  return record;
}

}  // namespace derivmine::corpus
