#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "derivmine/core/files.hpp"
#include "derivmine/texmath/canonical.hpp"
#include "derivmine/texmath/extract.hpp"
#include "derivmine/texmath/tokenizer.hpp"
#include "support/extract_cases.hpp"

using namespace derivmine;
using namespace derivmine::texmath;
namespace fs = std::filesystem;

TEST_CASE("annotated extraction fixtures") {
  const auto cases = dmtest::load_cases();
  REQUIRE(cases.size() == 22);
  for (const auto& c : cases) {
    CAPTURE(c.input.filename().string());
    const auto expected = dmtest::expected_for(c);
    const auto srcs = c.sources();
    CHECK(dmtest::summarize(extract_document_serial(srcs)) == expected);
  }
}

TEST_CASE("parallel extraction matches the serial reference") {
  for (const auto& c : dmtest::load_cases()) {
    CAPTURE(c.input.filename().string());
    const auto srcs = c.sources();
    const auto a = extract_document_serial(srcs);
    const auto b = extract_document(srcs);
    CHECK(a.expressions == b.expressions);
    CHECK(a.skipped_inline == b.skipped_inline);
    CHECK(a.duplicates_merged == b.duplicates_merged);
    CHECK(a.diagnostics.size() == b.diagnostics.size());
  }
}

TEST_CASE("source spans point at the original text") {
  for (const auto& c : dmtest::load_cases()) {
    CAPTURE(c.input.filename().string());
    const auto srcs = c.sources();
    for (const auto& e : extract_document_serial(srcs).expressions) {
      const auto it = std::find(c.names.begin(), c.names.end(), e.source_span.file);
      REQUIRE(it != c.names.end());
      const auto& text = c.texts[static_cast<std::size_t>(it - c.names.begin())];
      REQUIRE(e.source_span.end <= text.size());
      REQUIRE(e.source_span.begin < e.source_span.end);
      const auto mode = e.kind == ExpressionKind::formula ? CanonicalMode::math : CanonicalMode::text;
      const auto slice = std::string_view(text).substr(e.source_span.begin, e.source_span.end - e.source_span.begin);
      CHECK(squash_whitespace(canonicalize(slice, mode)).find(squash_whitespace(e.latex)) != std::string::npos);
    }
  }
}

TEST_CASE("tokens tile the source") {
  for (const auto& c : dmtest::load_cases()) {
    for (const auto& text : c.texts) {
      const auto ts = tokenize_latex(text);
      std::size_t at = 0;
      for (const auto& t : ts.tokens) {
        REQUIRE(t.begin == at);
        at = t.end;
      }
      CHECK(at == text.size());
    }
  }
}

TEST_CASE("canonical form") {
  CHECK(canonicalize("\\begin{equation}\\label{eq:a}  a  +  b \\end{equation}") == "a+b");
  CHECK(canonicalize("$$x % note\n = y$$") == "x=y");
  CHECK(canonicalize("\\alpha \\beta") == "\\alpha\\beta");
  CHECK(canonicalize("\\alpha  b") == "\\alpha b");
  CHECK(canonicalize("a \\ b") == "a\\ b");
  CHECK(canonicalize("x = y \\tag{3} \\nonumber") == "x=y");
  for (const auto& c : dmtest::load_cases()) {
    const auto srcs = c.sources();
    for (const auto& e : extract_document_serial(srcs).expressions) {
      const auto mode = e.kind == ExpressionKind::formula ? CanonicalMode::math : CanonicalMode::text;
      CHECK(canonicalize(e.latex, mode) == e.latex);
    }
  }
}

TEST_CASE("balance checks") {
  CHECK(is_balanced("\\frac{a}{b}"));
  CHECK(is_balanced("\\{ x \\}"));
  CHECK_FALSE(is_balanced("\\frac{a}{b"));
  CHECK_FALSE(is_balanced("\\begin{cases} x"));
  CHECK(is_balanced("\\begin{cases} x \\end{cases}"));
}

TEST_CASE("dedup keeps the first occurrence with the earliest number") {
  MathExpression a;
  a.latex = "x";
  MathExpression b = a;
  b.number_label = "(2)";
  MathExpression c;
  c.latex = "y";
  std::size_t merged = 0;
  const auto out = dedup({a, c, b}, &merged);
  REQUIRE(out.size() == 2);
  CHECK(merged == 1);
  CHECK(out[0].latex == "x");
  CHECK(out[0].number_label == std::optional<std::string>("(2)"));
}

TEST_CASE("expression json round trip") {
  const std::string src = "\\begin{lemma}\\label{l:a} For all $x$, $x\\le x$.\\end{lemma}\n\\begin{equation}a=b\\end{equation}\n";
  const std::vector<SourceText> files{{"m.tex", src}};
  const auto r = extract_document_serial(files);
  REQUIRE(r.expressions.size() == 2);
  CHECK(r.expressions[0].kind == ExpressionKind::lemma);
  CHECK(r.expressions[0].tex_label == std::optional<std::string>("l:a"));
  CHECK(r.expressions[0].expr_id == "e1");
  for (const auto& e : r.expressions) CHECK(expression_from_json(to_json(e)) == e);
  const auto lines = to_jsonl(r);
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
}
