#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "derivmine/texmath/token.hpp"

namespace derivmine::texmath {

enum class ExpressionKind { formula, lemma, theorem, corollary, definition, proposition };

std::string_view to_string(ExpressionKind k) noexcept;
std::optional<ExpressionKind> parse_expression_kind(std::string_view s) noexcept;
bool is_theorem_like(ExpressionKind k) noexcept;

struct SourceSpan {
  std::string file;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SourceSpan&) const = default;
};

struct MathExpression {
  std::string expr_id;
  ExpressionKind kind = ExpressionKind::formula;
  std::string latex;  // canonical
  std::optional<std::string> number_label;  // "(4)", "(2), (3)", "Lemma 1"
  std::optional<std::string> tex_label;     // first \label{...} key, if any
  SourceSpan source_span;
  bool display = true;

  bool operator==(const MathExpression&) const = default;
};

struct ExtractionReport {
  std::vector<MathExpression> expressions;
  std::size_t skipped_inline = 0;
  std::size_t duplicates_merged = 0;
  std::vector<Diagnostic> diagnostics;
};

// How a theorem-like environment is numbered and classified.
struct TheoremEnv {
  ExpressionKind kind = ExpressionKind::theorem;
  std::string display_name;  // "Lemma"
  std::string counter;       // shared counters carry the same name
  bool numbered = true;
  // "section" for \newtheorem{lem}{Lemma}[section]: "Lemma 2.1".
  std::string within;
};

using EnvironmentMap = std::map<std::string, TheoremEnv>;

EnvironmentMap default_environment_map();

// Adds \newtheorem / \declaretheorem definitions found in the source whose
// display name classifies as one of the theorem-like kinds.
void scan_theorem_definitions(std::string_view source, EnvironmentMap& envs);

struct ExtractOptions {
  EnvironmentMap environments = default_environment_map();
  bool scan_preamble = true;
  // Expression ids are id_prefix + 1-based position after deduplication.
  std::string id_prefix = "e";
};

// Extracts display formulas and theorem-like statements from one file and
// deduplicates them. Unbalanced environments drop only the affected
// expression and are reported in diagnostics.
ExtractionReport extract_expressions(const TokenStream& tokens, std::string_view source, const std::string& file,
                                     const ExtractOptions& options = {});

struct SourceText {
  std::string path;
  std::string_view text;
};

// Multi-file extraction with equation and theorem counters running across
// files in the order given. The OpenMP version lexes files concurrently;
// the serial one is the reference it is tested against.
ExtractionReport extract_document(std::span<const SourceText> files, const ExtractOptions& options = {});
ExtractionReport extract_document_serial(std::span<const SourceText> files, const ExtractOptions& options = {});

// Keeps the first expression per canonical latex, in order. The kept
// expression takes the earliest number label among its duplicates.
std::vector<MathExpression> dedup(std::vector<MathExpression> expressions, std::size_t* merged = nullptr);

nlohmann::json to_json(const MathExpression& e);
MathExpression expression_from_json(const nlohmann::json& j);
// One expression per line: expr_id, kind, latex, number_label, file, start, end.
std::string to_jsonl(const ExtractionReport& report);

}  // namespace derivmine::texmath
