#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derivmine/corpus/types.hpp"

namespace derivmine::corpus {

// Word characters: letters and digits (ASCII, Latin-1, Latin Extended,
// Greek, Cyrillic and other non-punctuation code points) plus '_'.
bool is_word_codepoint(char32_t cp) noexcept;

// Simple case fold: ASCII, Latin-1 supplement, Greek and Cyrillic capitals.
char32_t fold_codepoint(char32_t cp) noexcept;
std::string fold_case(std::string_view text);

// Counts case-insensitive whole-word occurrences of each lexicon term.
// Every lexicon term appears in the result, zero counts included.
MarkerProfile count_markers(std::string_view text, const std::set<std::string>& lexicon);

// Batch kernels over many documents. count_markers_serial is the reference
// the OpenMP version is tested against; both return profiles in input order.
std::vector<MarkerProfile> count_markers_serial(std::span<const std::string_view> documents,
                                                const std::set<std::string>& lexicon);
std::vector<MarkerProfile> count_markers_parallel(std::span<const std::string_view> documents,
                                                  const std::set<std::string>& lexicon);

}  // namespace derivmine::corpus
