#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "derivmine/corpus/types.hpp"

namespace derivmine::corpus {

// On-disk corpus: <root>/corpus.jsonl holds one record per line without its
// body; <root>/bodies/<paper_id>.txt holds the concatenated source text.
// Source file boundaries are stored as (offset, length) slices of the body.
class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Throws Error{DuplicateId} if the id is already stored.
  void insert(const PaperRecord& record);
  // Replaces the stored index entry; the body is immutable after insert.
  // Throws Error{UnknownPaper}.
  void update(const PaperRecord& record);

  bool contains(const std::string& paper_id) const;
  // Loads the full record including its body and source files.
  std::optional<PaperRecord> get(const std::string& paper_id) const;
  std::vector<std::string> ids() const;

 private:
  struct IndexEntry {
    json line;  // serialized record without body
  };

  void persist_index_locked() const;
  std::filesystem::path body_path(const std::string& paper_id) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, IndexEntry> index_;
};

// Reads the bundle, builds the record with its marker profile and stores it.
// Metadata errors surface as Error{MalformedMetadata}; see load_bundle and
// CorpusStore::insert for the others.
PaperRecord ingest_paper(CorpusStore& store, const std::filesystem::path& bundle, const json& metadata,
                         const std::set<std::string>& lexicon);

PaperRecord make_record(const PaperMetadata& meta, std::vector<SourceFile> files,
                        const std::set<std::string>& lexicon);

}  // namespace derivmine::corpus
