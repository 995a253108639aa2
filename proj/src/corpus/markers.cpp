#include "derivmine/corpus/markers.hpp"

#include <unordered_map>

#include <omp.h>

#include "derivmine/core/utf8.hpp"

namespace derivmine::corpus {

bool is_word_codepoint(char32_t cp) noexcept {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
  }
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;  // multiplication and division signs
  if (cp == 0x37E || cp == 0x387) return false;  // Greek question mark, ano teleia
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, operators
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE10 && cp <= 0xFE6F) return false;
  if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
      (cp >= 0xFF5B && cp <= 0xFF65))
    return false;
  if (cp == 0xFEFF || cp == utf8::kReplacement) return false;
  return true;
}

char32_t fold_codepoint(char32_t cp) noexcept {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x178) return 0xFF;
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (odd_upper) return (cp & 1) ? cp + 1 : cp;
    if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    return (cp & 1) ? cp : cp + 1;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (cp >= 0x388 && cp <= 0x38A) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (cp == 0x38E || cp == 0x38F) return cp + 0x3F;
  if (cp == 0x3AA || cp == 0x3AB) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) utf8::append(out, fold_codepoint(utf8::next(text, pos)));
  return out;
}

namespace {

class MarkerCounter {
 public:
  explicit MarkerCounter(const std::set<std::string>& lexicon) {
    for (const auto& term : lexicon) {
      auto folded = fold_case(term);
      profile_.counts.emplace(folded, 0);
    }
    for (auto& [term, count] : profile_.counts) slots_.emplace(term, &count);
  }

  MarkerCounter(const MarkerCounter&) = delete;
  MarkerCounter& operator=(const MarkerCounter&) = delete;

  MarkerProfile run(std::string_view text) {
    std::string word;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const char32_t cp = utf8::next(text, pos);
      if (is_word_codepoint(cp)) {
        utf8::append(word, fold_codepoint(cp));
      } else if (!word.empty()) {
        flush(word);
      }
    }
    if (!word.empty()) flush(word);
    return profile_;
  }

 private:
  void flush(std::string& word) {
    if (auto it = slots_.find(word); it != slots_.end()) {
      ++*it->second;
      ++profile_.total;
    }
    word.clear();
  }

  MarkerProfile profile_;
  std::unordered_map<std::string, std::uint64_t*> slots_;
};

}  // namespace

MarkerProfile count_markers(std::string_view text, const std::set<std::string>& lexicon) {
  MarkerCounter counter(lexicon);
  return counter.run(text);
}

std::vector<MarkerProfile> count_markers_serial(std::span<const std::string_view> documents,
                                                const std::set<std::string>& lexicon) {
  std::vector<MarkerProfile> out;
  out.reserve(documents.size());
  for (auto doc : documents) out.push_back(count_markers(doc, lexicon));
  return out;
}

std::vector<MarkerProfile> count_markers_parallel(std::span<const std::string_view> documents,
                                                  const std::set<std::string>& lexicon) {
  std::vector<MarkerProfile> out(documents.size());
  const auto n = static_cast<std::ptrdiff_t>(documents.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = count_markers(documents[static_cast<std::size_t>(i)], lexicon);
  }
  return out;
}

}  // namespace derivmine::corpus
