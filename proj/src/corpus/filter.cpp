#include "derivmine/corpus/filter.hpp"

#include "derivmine/corpus/markers.hpp"

namespace derivmine::corpus {

namespace {

bool profile_matches_lexicon(const MarkerProfile& profile, const std::set<std::string>& lexicon) {
  std::set<std::string> folded;
  for (const auto& t : lexicon) folded.insert(fold_case(t));
  if (folded.size() != profile.counts.size()) return false;
  for (const auto& t : folded)
    if (!profile.counts.contains(t)) return false;
  return true;
}

}  // namespace

FilterVerdict evaluate_filter(const PaperRecord& record, const FilterPolicy& policy) {
  FilterVerdict v;
  v.policy_fingerprint = policy.fingerprint();
  if (static_cast<std::int64_t>(record.marker_profile.total) < policy.min_marker_total)
    v.failed_rules.push_back(FilterRule::markers);
  if (!policy.date_window.contains(record.published_on)) v.failed_rules.push_back(FilterRule::date);
  if (policy.require_score && record.review_score_class != ReviewScoreClass::above_weak_accept)
    v.failed_rules.push_back(FilterRule::score);
  v.accepted = v.failed_rules.empty();
  return v;
}

FilterVerdict apply_filter(PaperRecord& record, const FilterPolicy& policy) {
  if (!profile_matches_lexicon(record.marker_profile, policy.marker_lexicon))
    record.marker_profile = count_markers(record.body_text, policy.marker_lexicon);
  record.verdict = evaluate_filter(record, policy);
  return *record.verdict;
}

}  // namespace derivmine::corpus
