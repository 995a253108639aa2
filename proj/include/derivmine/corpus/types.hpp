#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/core/date.hpp"

namespace derivmine::corpus {

using json = nlohmann::json;

enum class ReviewScoreClass { above_weak_accept, weak_accept_or_below, unknown };

std::string_view to_string(ReviewScoreClass c) noexcept;
std::optional<ReviewScoreClass> parse_review_score_class(std::string_view s) noexcept;

struct SourceFile {
  std::string path;  // relative to the bundle root, '/' separated
  std::string text;
};

struct MarkerProfile {
  std::map<std::string, std::uint64_t> counts;  // keyed by lower-cased lexicon term
  std::uint64_t total = 0;

  bool operator==(const MarkerProfile&) const = default;
};

enum class FilterRule { markers, date, score };
std::string_view to_string(FilterRule r) noexcept;

struct DateWindow {
  Date start{2023, 5, 1};
  Date end{2024, 10, 31};

  bool contains(const Date& d) const noexcept { return start <= d && d <= end; }
};

std::set<std::string> default_marker_lexicon();

struct FilterPolicy {
  std::set<std::string> marker_lexicon = default_marker_lexicon();
  // "more than five" occurrences, compared with >=.
  std::int64_t min_marker_total = 6;
  DateWindow date_window{};
  bool require_score = true;

  // Human-readable violations of the policy invariants; empty when valid.
  std::vector<std::string> validate() const;
  std::string fingerprint() const;

  json to_json() const;
  static FilterPolicy from_json(const json& j);
};

struct FilterVerdict {
  bool accepted = false;
  std::vector<FilterRule> failed_rules;
  std::string policy_fingerprint;

  bool operator==(const FilterVerdict&) const = default;
};

// Sidecar metadata for one paper bundle.
struct PaperMetadata {
  std::string paper_id;
  std::string title;
  Date published_on;
  std::string venue;
  ReviewScoreClass review_score_class = ReviewScoreClass::unknown;
  std::optional<std::string> bundle;  // bundle path override, relative to the corpus root

  // Throws Error{MalformedMetadata} listing every missing or invalid field.
  static PaperMetadata from_json(const json& j);
};

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string body_text;
  std::vector<SourceFile> source_files;
  Date published_on;
  std::string venue;
  ReviewScoreClass review_score_class = ReviewScoreClass::unknown;
  MarkerProfile marker_profile;
  std::optional<FilterVerdict> verdict;
};

// Files joined in order with single newlines.
std::string join_sources(const std::vector<SourceFile>& files);

json to_json(const MarkerProfile& p);
MarkerProfile marker_profile_from_json(const json& j);
json to_json(const FilterVerdict& v);
FilterVerdict verdict_from_json(const json& j);

}  // namespace derivmine::corpus
