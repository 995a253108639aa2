#include "derivmine/corpus/types.hpp"

#include <algorithm>

#include "derivmine/core/error.hpp"
#include "derivmine/core/hash.hpp"
#include "derivmine/core/utf8.hpp"
#include "derivmine/corpus/markers.hpp"

namespace derivmine::corpus {

std::string_view to_string(ReviewScoreClass c) noexcept {
  switch (c) {
    case ReviewScoreClass::above_weak_accept: return "above_weak_accept";
    case ReviewScoreClass::weak_accept_or_below: return "weak_accept_or_below";
    case ReviewScoreClass::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<ReviewScoreClass> parse_review_score_class(std::string_view s) noexcept {
  if (s == "above_weak_accept") return ReviewScoreClass::above_weak_accept;
  if (s == "weak_accept_or_below") return ReviewScoreClass::weak_accept_or_below;
  if (s == "unknown") return ReviewScoreClass::unknown;
  return std::nullopt;
}

std::string_view to_string(FilterRule r) noexcept {
  switch (r) {
    case FilterRule::markers: return "markers";
    case FilterRule::date: return "date";
    case FilterRule::score: return "score";
  }
  return "markers";
}

std::set<std::string> default_marker_lexicon() {
  return {"assume", "derive", "derivation", "proof", "prove", "lemma", "theorem"};
}

std::vector<std::string> FilterPolicy::validate() const {
  std::vector<std::string> errors;
  if (marker_lexicon.empty()) errors.push_back("marker_lexicon must not be empty");
  for (const auto& term : marker_lexicon) {
    if (term.empty()) {
      errors.push_back("marker_lexicon contains an empty term");
      continue;
    }
    std::size_t pos = 0;
    while (pos < term.size()) {
      if (!is_word_codepoint(utf8::next(term, pos))) {
        errors.push_back("marker term '" + term + "' is not a single word");
        break;
      }
    }
  }
  if (min_marker_total < 1) errors.push_back("min_marker_total must be >= 1");
  if (date_window.end < date_window.start) errors.push_back("date_window start must not be after end");
  return errors;
}

json FilterPolicy::to_json() const {
  std::vector<std::string> lex;
  for (const auto& t : marker_lexicon) lex.push_back(fold_case(t));
  std::sort(lex.begin(), lex.end());
  lex.erase(std::unique(lex.begin(), lex.end()), lex.end());
  return json{{"marker_lexicon", lex},
              {"min_marker_total", min_marker_total},
              {"date_window", {{"start", date_window.start.to_string()}, {"end", date_window.end.to_string()}}},
              {"require_score", require_score}};
}

std::string FilterPolicy::fingerprint() const { return content_hash(to_json().dump()); }

FilterPolicy FilterPolicy::from_json(const json& j) {
  FilterPolicy p;
  if (j.contains("marker_lexicon")) p.marker_lexicon = j.at("marker_lexicon").get<std::set<std::string>>();
  if (j.contains("min_marker_total")) p.min_marker_total = j.at("min_marker_total").get<std::int64_t>();
  if (j.contains("require_score")) p.require_score = j.at("require_score").get<bool>();
  if (j.contains("date_window")) {
    const auto& w = j.at("date_window");
    for (auto [key, slot] : {std::pair{"start", &p.date_window.start}, std::pair{"end", &p.date_window.end}}) {
      if (!w.contains(key)) continue;
      auto d = Date::parse(w.at(key).get<std::string>());
      if (!d) throw Error(Errc::ConfigError, std::string("date_window.") + key + " is not an ISO-8601 date");
      *slot = *d;
    }
  }
  return p;
}

PaperMetadata PaperMetadata::from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::MalformedMetadata, "metadata must be a JSON object");
  std::vector<std::string> problems;
  PaperMetadata m;
  auto str = [&](const char* key, bool required) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) {
      if (required) problems.push_back(std::string("missing ") + key);
      return std::nullopt;
    }
    if (!j.at(key).is_string()) {
      problems.push_back(std::string(key) + " must be a string");
      return std::nullopt;
    }
    return j.at(key).get<std::string>();
  };
  if (auto id = str("paper_id", true)) {
    if (id->empty()) problems.push_back("paper_id must not be empty");
    m.paper_id = *id;
  }
  if (auto date = str("published_on", true)) {
    if (auto d = Date::parse(*date)) m.published_on = *d;
    else problems.push_back("published_on is not an ISO-8601 date: " + *date);
  }
  m.title = str("title", false).value_or("");
  m.venue = str("venue", false).value_or("");
  if (auto score = str("review_score_class", false)) {
    if (auto c = parse_review_score_class(*score)) m.review_score_class = *c;
    else problems.push_back("unknown review_score_class: " + *score);
  }
  m.bundle = str("bundle", false);
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(Errc::MalformedMetadata, msg);
  }
  return m;
}

std::string join_sources(const std::vector<SourceFile>& files) {
  std::string body;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i) body.push_back('\n');
    body += files[i].text;
  }
  return body;
}

json to_json(const MarkerProfile& p) { return json{{"counts", p.counts}, {"total", p.total}}; }

MarkerProfile marker_profile_from_json(const json& j) {
  MarkerProfile p;
  p.counts = j.at("counts").get<std::map<std::string, std::uint64_t>>();
  p.total = j.at("total").get<std::uint64_t>();
  return p;
}

json to_json(const FilterVerdict& v) {
  json rules = json::array();
  for (auto r : v.failed_rules) rules.push_back(to_string(r));
  return json{{"accepted", v.accepted}, {"failed_rules", rules}, {"policy_fingerprint", v.policy_fingerprint}};
}

FilterVerdict verdict_from_json(const json& j) {
  FilterVerdict v;
  v.accepted = j.at("accepted").get<bool>();
  for (const auto& r : j.at("failed_rules")) {
    const auto s = r.get<std::string>();
    if (s == "markers") v.failed_rules.push_back(FilterRule::markers);
    else if (s == "date") v.failed_rules.push_back(FilterRule::date);
    else if (s == "score") v.failed_rules.push_back(FilterRule::score);
  }
  v.policy_fingerprint = j.at("policy_fingerprint").get<std::string>();
  return v;
}

}  // namespace derivmine::corpus
