#pragma once

#include "derivmine/corpus/types.hpp"

namespace derivmine::corpus {

// Pure evaluation of the policy against a record's profile and metadata.
FilterVerdict evaluate_filter(const PaperRecord& record, const FilterPolicy& policy);

// Recounts the marker profile when its lexicon differs from the policy's,
// evaluates, and stores the verdict on the record.
FilterVerdict apply_filter(PaperRecord& record, const FilterPolicy& policy);

}  // namespace derivmine::corpus
