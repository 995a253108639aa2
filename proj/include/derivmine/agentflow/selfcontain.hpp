#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace derivmine::agentflow {

struct MathSegment {
  std::size_t begin = 0;  // delimiters included
  std::size_t end = 0;
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
  bool display = false;
};

// Math segments of running text: $..$, $$..$$, \(..\), \[..\] and math
// environments such as equation or align. Unterminated segments are ignored.
std::vector<MathSegment> math_segments(std::string_view text);

// Symbols of a math string in first-appearance order: single Latin letters,
// Greek letter commands, font-styled letters ("\mathbb{E}") and
// \operatorname names. Upright text (\mathrm, \text, ...) and multi-letter
// sub/superscript labels such as _{ref} are not symbols.
std::vector<std::string> math_symbols(std::string_view math);

struct NumberedReference {
  std::string text;    // "Formula (4)", "Lemma 2"
  std::string number;  // "4", "2"
  bool formula = true;
  std::size_t at = 0;
};

// "Formula 3", "Eq. (3)", "Equation 3", "Lemma 1", "Theorem 2.1", ... found
// outside math segments.
std::vector<NumberedReference> numbered_references(std::string_view text);

struct SelfContainmentReport {
  // References by number whose content does not appear next to them.
  std::vector<std::string> unresolved_references;
  // Answer symbols that neither the question nor the answer introduces.
  std::vector<std::string> undefined_symbols;

  bool passed() const noexcept { return unresolved_references.empty() && undefined_symbols.empty(); }
  nlohmann::json to_json() const;
  std::string summary() const;
};

// A reference is resolved when its content follows it ("Formula 3: $X$",
// "Lemma 1: statement") or when a formula carries its number ("$X$ (3)",
// \tag{3}). An answer symbol is introduced if it occurs in the question's
// math, or in the answer next to a definition phrase (where, let, denote,
// ... before it; is, are, denotes, ... after it; or on the left of :=).
SelfContainmentReport check_self_containment(std::string_view question, std::string_view answer);

// The symbol part of the check alone; used to brief the context collector.
std::vector<std::string> undefined_symbols(std::string_view question, std::string_view answer);

// Display equations of `before` that `after` no longer contains although the
// remaining answer or the question still cites them by number, plus the
// target formula when `before` contained it.
std::vector<std::string> dropped_needed_equations(std::string_view before, std::string_view after,
                                                  std::string_view question,
                                                  std::optional<std::string_view> target_latex = std::nullopt);

// True when the LaTeX of `formula` occurs in `text` up to whitespace and
// canonical spacing.
bool embeds_latex(std::string_view text, std::string_view formula);

}  // namespace derivmine::agentflow
