#include "derivmine/curation/service.hpp"

#include <algorithm>
#include <set>

#include "derivmine/core/error.hpp"
#include "derivmine/core/files.hpp"

namespace derivmine::curation {

namespace fs = std::filesystem;
using store::Sample;
using store::Stage;

std::string_view to_string(SelectionPolicy p) noexcept {
  return p == SelectionPolicy::all_accepted ? "all_accepted" : "top_k_by_difficulty_rank";
}

std::optional<SelectionPolicy> parse_selection_policy(std::string_view s) noexcept {
  if (s == "all_accepted") return SelectionPolicy::all_accepted;
  if (s == "top_k_by_difficulty_rank" || s == "top_k") return SelectionPolicy::top_k_by_difficulty_rank;
  return std::nullopt;
}

json ReviewItem::to_json() const {
  json ts = json::array();
  for (const auto& t : transcripts) {
    json m{{"transcript_id", t.transcript_id}, {"agent_role", store::to_string(t.agent_role)},
           {"attempt", t.attempt},             {"outcome", store::to_string(t.outcome)},
           {"provider_name", t.provider_name}};
    m["error_code"] = t.error_code ? json(*t.error_code) : json(nullptr);
    ts.push_back(std::move(m));
  }
  json j{{"sample", store::to_json(sample)}, {"transcripts", ts}};
  j["lease"] = lease ? json{{"reviewer_id", lease->reviewer_id}, {"expires", format_timestamp(lease->expires)}}
                     : json(nullptr);
  return j;
}

json ExportItem::to_json() const {
  json prov{{"paper_id", paper_id}, {"expr_id", expr_id}, {"decision_ids", decision_ids}};
  prov["difficulty_rank"] = difficulty_rank ? json(*difficulty_rank) : json(nullptr);
  return json{{"item_id", item_id}, {"question", question}, {"answer", answer}, {"provenance", prov}};
}

json DatasetExport::meta_json() const {
  json j{{"name", name},
         {"created_at", created_at},
         {"selection_policy", to_string(selection_policy)},
         {"count", items.size()}};
  j["k"] = k ? json(*k) : json(nullptr);
  return j;
}

std::string DatasetExport::to_jsonl() const {
  std::string out;
  for (const auto& i : items) {
    out += i.to_json().dump();
    out += '\n';
  }
  return out;
}

void order_by_difficulty(std::vector<ExportItem>& items) {
  std::stable_sort(items.begin(), items.end(), [](const ExportItem& a, const ExportItem& b) {
    const auto ra = a.difficulty_rank.value_or(INT64_MAX);
    const auto rb = b.difficulty_rank.value_or(INT64_MAX);
    return std::tie(ra, a.paper_id, a.expr_id, a.item_id) < std::tie(rb, b.paper_id, b.expr_id, b.item_id);
  });
}

CurationService::CurationService(store::SampleStore& store, Clock& clock, fs::path export_dir, CurationOptions options)
    : store_(store), clock_(clock), export_dir_(std::move(export_dir)), options_(options) {
  if (options_.consensus < 1) throw Error(Errc::ConfigError, "curation.consensus must be at least 1");
}

std::size_t CurationService::enqueue_samples(const std::vector<std::string>& sample_ids) {
  std::lock_guard lock(mu_);
  return store_.enqueue(sample_ids);
}

std::size_t CurationService::queue_length() const {
  std::size_t n = 0;
  for (const auto& s : store_.samples())
    if (s.stage == Stage::review_pending) ++n;
  return n;
}

bool CurationService::leased_by_other_locked(const std::string& sample_id, const std::string& reviewer_id) const {
  const auto it = leases_.find(sample_id);
  return it != leases_.end() && it->second.expires > clock_.now() && it->second.reviewer_id != reviewer_id;
}

ReviewItem CurationService::next_for_review(const std::string& reviewer_id, const std::optional<std::string>& paper_id) {
  if (reviewer_id.empty()) throw Error(Errc::InvalidDecision, "reviewer_id is required");
  std::lock_guard lock(mu_);
  std::vector<Sample> queued;
  for (auto& s : store_.samples())
    if (s.stage == Stage::review_pending && (!paper_id || s.paper_id == *paper_id)) queued.push_back(std::move(s));
  std::stable_sort(queued.begin(), queued.end(), [](const Sample& a, const Sample& b) {
    return a.queue_position.value_or(INT64_MAX) < b.queue_position.value_or(INT64_MAX);
  });
  const Sample* pick = nullptr;
  for (const auto& s : queued) {
    const auto it = leases_.find(s.sample_id);
    if (it != leases_.end() && it->second.reviewer_id == reviewer_id && it->second.expires > clock_.now()) {
      pick = &s;
      break;
    }
  }
  if (!pick)
    for (const auto& s : queued)
      if (!leased_by_other_locked(s.sample_id, reviewer_id)) {
        pick = &s;
        break;
      }
  if (!pick) throw Error(Errc::QueueEmpty, paper_id ? "no sample of " + *paper_id + " awaits review" : "no sample awaits review");
  Lease lease{reviewer_id, clock_.now() + options_.lease};
  leases_[pick->sample_id] = lease;
  ReviewItem item;
  item.sample = *pick;
  for (const auto& ref : pick->transcripts)
    if (auto t = store_.transcript(ref)) item.transcripts.push_back(std::move(*t));
  item.lease = lease;
  return item;
}

ReviewItem CurationService::get(const std::string& sample_id) const {
  const auto s = store_.get(sample_id);
  if (!s) throw Error(Errc::UnknownSample, "unknown sample " + sample_id);
  ReviewItem item;
  item.sample = *s;
  for (const auto& ref : s->transcripts)
    if (auto t = store_.transcript(ref)) item.transcripts.push_back(std::move(*t));
  item.lease = lease_of(sample_id);
  return item;
}

std::optional<Lease> CurationService::lease_of(const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  const auto it = leases_.find(sample_id);
  if (it == leases_.end() || it->second.expires <= clock_.now()) return std::nullopt;
  return it->second;
}

std::vector<ReviewDecision> CurationService::decisions_of(const std::string& sample_id) const {
  std::vector<ReviewDecision> out;
  for (const auto& e : store_.events_for(sample_id))
    if (e.decision) out.push_back(decision_from_json(*e.decision));
  return out;
}

Sample CurationService::submit_decision(ReviewDecision d) {
  std::lock_guard lock(mu_);
  auto current = store_.get(d.sample_id);
  if (!current) throw Error(Errc::UnknownSample, "unknown sample " + d.sample_id);
  if (d.reviewer_id.empty()) throw Error(Errc::InvalidDecision, "reviewer_id is required");
  if (current->stage != Stage::review_pending)
    throw Error(Errc::NotReviewable, "sample " + d.sample_id + " is " + std::string(to_string(current->stage)));
  if (d.base_version != current->version)
    throw Error(Errc::VersionConflict, "sample " + d.sample_id + " is at version " + std::to_string(current->version) +
                                           ", decision was made on version " + std::to_string(d.base_version));
  if (d.action == Action::accept && !d.rubric_passed())
    throw Error(Errc::RubricViolation, "accept requires all four rubric answers to be true");
  if (d.action == Action::edit) {
    if (!d.edited_question && !d.edited_answer)
      throw Error(Errc::InvalidDecision, "edit requires edited_question or edited_answer");
    if ((d.edited_question && d.edited_question->empty()) || (d.edited_answer && d.edited_answer->empty()))
      throw Error(Errc::InvalidDecision, "edited text must not be empty");
  }

  d.decision_id = d.sample_id + "@v" + std::to_string(d.base_version);
  d.decided_at = format_timestamp(clock_.now());

  Sample next = *current;
  next.version = current->version + 1;
  switch (d.action) {
    case Action::accept: {
      std::set<std::string> accepting;
      for (const auto& prior : decisions_of(d.sample_id)) {
        if (prior.action == Action::edit) accepting.clear();
        else if (prior.action == Action::accept) accepting.insert(prior.reviewer_id);
      }
      accepting.insert(d.reviewer_id);
      if (static_cast<int>(accepting.size()) >= options_.consensus) next.stage = Stage::accepted;
      break;
    }
    case Action::reject:
      next.stage = Stage::rejected;
      next.reject_reason = "reviewer";
      break;
    case Action::edit:
      if (d.edited_question) next.question = *d.edited_question;
      if (d.edited_answer) next.answer = *d.edited_answer;
      break;
  }
  store_.record(next, "decision", {}, to_json(d), std::string(to_string(d.action)) + " by " + d.reviewer_id);
  leases_.erase(d.sample_id);
  return next;
}

DatasetExport CurationService::export_dataset(const std::string& name, SelectionPolicy policy,
                                              std::optional<std::size_t> k) {
  if (name.empty() || safe_file_stem(name) != name)
    throw Error(Errc::ConfigError, "export name must use letters, digits, '-', '_' or '.'");
  if (policy == SelectionPolicy::top_k_by_difficulty_rank && (!k || *k == 0))
    throw Error(Errc::ConfigError, "top_k export needs k >= 1");
  std::lock_guard lock(mu_);
  const auto path = export_dir_ / (name + ".jsonl");
  if (fs::exists(path)) throw Error(Errc::DuplicateId, "export " + name + " already exists");

  std::vector<ExportItem> items;
  for (const auto& s : store_.samples()) {
    if (s.stage != Stage::accepted) continue;
    ExportItem item;
    item.item_id = s.sample_id;
    item.question = s.question.value_or("");
    item.answer = s.answer.value_or("");
    item.paper_id = s.paper_id;
    item.expr_id = s.expression.expr_id;
    for (const auto& dec : decisions_of(s.sample_id)) {
      if (dec.action != Action::accept) continue;
      item.decision_ids.push_back(dec.decision_id);
      if (dec.difficulty_rank) item.difficulty_rank = dec.difficulty_rank;
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw Error(Errc::NothingAccepted, "no accepted samples to export");

  DatasetExport ex;
  ex.name = name;
  ex.created_at = format_timestamp(clock_.now());
  ex.selection_policy = policy;
  if (policy == SelectionPolicy::top_k_by_difficulty_rank) {
    order_by_difficulty(items);
    if (items.size() > *k) items.resize(*k);
    ex.k = k;
  }
  ex.items = std::move(items);
  fs::create_directories(export_dir_);
  write_file_atomic(export_dir_ / (name + ".meta.json"), ex.meta_json().dump(2) + "\n");
  write_file_atomic(path, ex.to_jsonl());
  return ex;
}

DatasetExport CurationService::load_export(const std::string& name) const {
  if (name.empty() || safe_file_stem(name) != name) throw Error(Errc::UnknownExport, "unknown export " + name);
  const auto path = export_dir_ / (name + ".jsonl");
  const auto meta_path = export_dir_ / (name + ".meta.json");
  if (!fs::exists(path) || !fs::exists(meta_path)) throw Error(Errc::UnknownExport, "unknown export " + name);
  const auto meta = json::parse(read_file(meta_path));
  DatasetExport ex;
  ex.name = meta.at("name").get<std::string>();
  ex.created_at = meta.at("created_at").get<std::string>();
  ex.selection_policy = parse_selection_policy(meta.at("selection_policy").get<std::string>()).value();
  if (!meta.at("k").is_null()) ex.k = meta.at("k").get<std::size_t>();
  for (const auto& j : read_jsonl(path)) {
    ExportItem i;
    i.item_id = j.at("item_id").get<std::string>();
    i.question = j.at("question").get<std::string>();
    i.answer = j.at("answer").get<std::string>();
    const auto& p = j.at("provenance");
    i.paper_id = p.at("paper_id").get<std::string>();
    i.expr_id = p.at("expr_id").get<std::string>();
    i.decision_ids = p.at("decision_ids").get<std::vector<std::string>>();
    if (!p.at("difficulty_rank").is_null()) i.difficulty_rank = p.at("difficulty_rank").get<std::int64_t>();
    ex.items.push_back(std::move(i));
  }
  return ex;
}

std::vector<store::StoreEvent> CurationService::audit_trail(const std::string& sample_id) const {
  if (!store_.contains(sample_id)) throw Error(Errc::UnknownSample, "unknown sample " + sample_id);
  return store_.events_for(sample_id);
}

std::optional<Sample> CurationService::state_at_version(const std::string& sample_id, std::int64_t version) const {
  std::optional<Sample> out;
  for (const auto& e : audit_trail(sample_id))
    if (e.version == version) out = store::sample_from_json(e.sample);
  return out;
}

}  // namespace derivmine::curation
