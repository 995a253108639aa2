#include "derivmine/agentflow/selfcontain.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

#include "derivmine/texmath/canonical.hpp"

namespace derivmine::agentflow {

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

constexpr std::array kMathEnvs{"equation", "equation*", "align",       "align*",   "gather",  "gather*",
                               "multline", "multline*", "displaymath", "eqnarray", "eqnarray*", "flalign",
                               "flalign*", "alignat",   "alignat*",    "dmath",    "dmath*",  "math"};

constexpr std::array kGreek{"alpha",   "beta",    "gamma",  "delta",  "epsilon", "varepsilon", "zeta",
                            "eta",     "theta",   "vartheta", "iota", "kappa",   "lambda",     "mu",
                            "nu",      "xi",      "pi",     "varpi",  "rho",     "varrho",     "sigma",
                            "varsigma", "tau",    "upsilon", "phi",   "varphi",  "chi",        "psi",
                            "omega",   "Gamma",   "Delta",  "Theta",  "Lambda",  "Xi",         "Pi",
                            "Sigma",   "Upsilon", "Phi",    "Psi",    "Omega"};

constexpr std::array kUpright{"text",  "textrm", "textit", "textbf", "textsf", "texttt", "mathrm", "mbox",
                              "hbox",  "label",  "tag",    "ref",    "eqref",  "cite",   "begin",  "end",
                              "textnormal", "mathtt"};

constexpr std::array kFonts{"mathbb", "mathcal", "mathbf", "mathsf", "mathfrak", "mathscr",
                            "boldsymbol", "bm", "mathit", "vec", "hat", "tilde", "bar"};

template <std::size_t N>
bool in(const std::array<const char*, N>& set, std::string_view s) {
  return std::any_of(set.begin(), set.end(), [&](const char* x) { return s == x; });
}

// Index just past the group that opens at `open` (a '{'), or npos.
std::size_t group_end(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// Copy of text with math segments blanked out, so prose patterns never match
// inside formulas.
std::string mask_math(std::string_view text, const std::vector<MathSegment>& segs) {
  std::string out(text);
  for (const auto& s : segs)
    for (std::size_t i = s.begin; i < s.end; ++i)
      if (out[i] != '\n') out[i] = ' ';
  return out;
}

const std::regex& formula_ref_re() {
  static const std::regex re(R"(\b(Formulas?|formulas?|Equations?|equations?|Eqs?\.|eqs?\.|Eqn\.|eqn\.)\s*\(?((?:[A-Z]\.)?\d+(?:\.\d+)*)\)?)");
  return re;
}

const std::regex& theorem_ref_re() {
  static const std::regex re(R"(\b(Lemma|Theorem|Corollary|Proposition|Definition)\s+((?:[A-Z]\.)?\d+(?:\.\d+)*))");
  return re;
}

const std::regex& bare_number_re() {
  static const std::regex re(R"(\(((?:[A-Z]\.)?\d+(?:\.\d+)*)\))");
  return re;
}

const std::regex& tag_re() {
  static const std::regex re(R"(\\tag\*?\{\s*\(?([^{}()]+?)\)?\s*\})");
  return re;
}

// Number written right after a segment: "$$..$$ (3)".
std::optional<std::string> trailing_number(std::string_view text, const MathSegment& seg) {
  std::size_t i = seg.end;
  while (i < text.size() && is_space(text[i])) ++i;
  if (i >= text.size() || text[i] != '(') return std::nullopt;
  const std::string rest(text.substr(i, 32));
  std::smatch m;
  if (std::regex_search(rest, m, bare_number_re(), std::regex_constants::match_continuous)) return m[1].str();
  return std::nullopt;
}

std::optional<std::string> tagged_number(std::string_view body) {
  const std::string b(body);
  std::smatch m;
  if (std::regex_search(b, m, tag_re())) return trimmed(m[1].str());
  return std::nullopt;
}

std::vector<std::string> segment_numbers(std::string_view text, const MathSegment& seg) {
  std::vector<std::string> out;
  if (auto n = trailing_number(text, seg)) out.push_back(*n);
  if (auto n = tagged_number(text.substr(seg.body_begin, seg.body_end - seg.body_begin))) out.push_back(*n);
  return out;
}

constexpr std::array kRelations{":=", "\\coloneqq", "\\triangleq", "\\equiv", "=", "\\in", "\\sim", "\\leq",
                                "\\geq", "\\le", "\\ge", "<", ">", "\\subseteq", "\\subset"};

// Left-hand side of the first relation, or npos when there is none.
std::size_t relation_at(std::string_view body) {
  std::size_t best = std::string_view::npos;
  for (const char* r : kRelations) {
    const auto at = body.find(r);
    if (at != std::string_view::npos && at < best) best = at;
  }
  return best;
}

constexpr std::array kBefore{"where", "let", "denote", "denotes", "define", "defines", "here", "given", "for",
                             "with", "assume", "suppose"};
constexpr std::array kAfter{"is ", "are ", "denotes", "denote ", "be ", "represents", "represent ", "stands for",
                            "refers to", "is\n", "are\n"};

std::string last_word(std::string_view s) {
  std::string t = trimmed(s);
  while (!t.empty() && (t.back() == ',' || t.back() == ':' || t.back() == ';')) t.pop_back();
  const auto sp = t.find_last_of(" \t\n");
  return lower(sp == std::string::npos ? t : t.substr(sp + 1));
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

std::vector<MathSegment> math_segments(std::string_view text) {
  std::vector<MathSegment> out;
  std::size_t i = 0;
  auto close_at = [&](std::string_view closer, std::size_t from) -> std::size_t {
    for (std::size_t j = from; j + closer.size() <= text.size(); ++j) {
      if (text[j] == '\\' && closer[0] != '\\') {
        ++j;
        continue;
      }
      if (text.substr(j, closer.size()) == closer) return j;
      if (text[j] == '\\') ++j;
    }
    return std::string_view::npos;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\\' && i + 1 < text.size()) {
      const char n = text[i + 1];
      if (n == '(' || n == '[') {
        const std::string_view closer = n == '(' ? "\\)" : "\\]";
        const auto e = close_at(closer, i + 2);
        if (e == std::string_view::npos) break;
        out.push_back({i, e + 2, i + 2, e, n == '['});
        i = e + 2;
        continue;
      }
      if (text.substr(i, 7) == "\\begin{") {
        const auto ne = text.find('}', i + 7);
        if (ne != std::string_view::npos) {
          const std::string name(text.substr(i + 7, ne - i - 7));
          if (in(kMathEnvs, name)) {
            const std::string closer = "\\end{" + name + "}";
            const auto e = text.find(closer, ne + 1);
            if (e == std::string_view::npos) break;
            out.push_back({i, e + closer.size(), ne + 1, e, name != "math"});
            i = e + closer.size();
            continue;
          }
        }
      }
      i += 2;
      continue;
    }
    if (c == '$') {
      const bool display = i + 1 < text.size() && text[i + 1] == '$';
      const std::size_t open = display ? 2 : 1;
      const auto e = close_at(display ? "$$" : "$", i + open);
      if (e == std::string_view::npos) break;
      out.push_back({i, e + open, i + open, e, display});
      i = e + open;
      continue;
    }
    ++i;
  }
  return out;
}

std::vector<std::string> math_symbols(std::string_view m) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < m.size()) {
    const char c = m[i];
    if (c == '\\') {
      std::size_t j = i + 1;
      while (j < m.size() && is_letter(m[j])) ++j;
      if (j == i + 1) {
        i += 2;
        continue;
      }
      const std::string name(m.substr(i + 1, j - i - 1));
      std::size_t k = j;
      while (k < m.size() && is_space(m[k])) ++k;
      if (name.starts_with("operatorname") || in(kFonts, name)) {
        if (k < m.size() && m[k] == '*') ++k;
        std::size_t end = k + 1;
        std::string arg;
        if (k < m.size() && m[k] == '{') {
          end = group_end(m, k);
          if (end == std::string_view::npos) end = m.size();
          arg = trimmed(m.substr(k + 1, end - k - 2));
        } else if (k < m.size()) {
          arg = std::string(1, m[k]);
        }
        if (!arg.empty()) add_unique(out, "\\" + name + "{" + arg + "}");
        i = std::min(end, m.size());
        continue;
      }
      if (in(kUpright, name)) {
        if (k < m.size() && m[k] == '{') {
          const auto end = group_end(m, k);
          i = end == std::string_view::npos ? m.size() : end;
        } else {
          i = j;
        }
        continue;
      }
      if (in(kGreek, name)) add_unique(out, "\\" + name);
      i = j;
      continue;
    }
    if ((c == '_' || c == '^') && i + 1 < m.size()) {
      std::size_t k = i + 1;
      while (k < m.size() && is_space(m[k])) ++k;
      if (k < m.size() && m[k] == '{') {
        const auto end = group_end(m, k);
        if (end != std::string_view::npos) {
          const std::string inner = trimmed(m.substr(k + 1, end - k - 2));
          if (inner.size() >= 2 && std::all_of(inner.begin(), inner.end(), is_letter)) {
            i = end;
            continue;
          }
        }
      }
      ++i;
      continue;
    }
    if (is_letter(c)) add_unique(out, std::string(1, c));
    ++i;
  }
  return out;
}

std::vector<NumberedReference> numbered_references(std::string_view text) {
  const auto masked = mask_math(text, math_segments(text));
  std::vector<NumberedReference> out;
  for (const auto* re : {&formula_ref_re(), &theorem_ref_re()}) {
    const bool formula = re == &formula_ref_re();
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(), *re); it != std::sregex_iterator(); ++it) {
      NumberedReference r;
      r.text = trimmed(it->str());
      r.number = (*it)[2].str();
      r.formula = formula;
      r.at = static_cast<std::size_t>(it->position());
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
  return out;
}

namespace {

std::vector<std::string> unresolved(std::string_view text) {
  const auto segs = math_segments(text);
  std::set<std::string> formulas, statements;
  for (const auto& s : segs)
    for (const auto& n : segment_numbers(text, s)) formulas.insert(n);

  const auto refs = numbered_references(text);
  for (const auto& r : refs) {
    std::size_t i = r.at + r.text.size();
    while (i < text.size() && is_space(text[i])) ++i;
    const bool colon = i < text.size() && text[i] == ':';
    if (colon) ++i;
    while (i < text.size() && is_space(text[i])) ++i;
    if (r.formula) {
      const bool math_next = std::any_of(segs.begin(), segs.end(), [&](const auto& s) { return s.begin == i; });
      if (math_next) formulas.insert(r.number);
    } else if (colon && i < text.size()) {
      statements.insert(r.text);
    }
  }
  std::vector<std::string> out;
  for (const auto& r : refs) {
    const bool ok = r.formula ? formulas.contains(r.number) : statements.contains(r.text);
    if (!ok) add_unique(out, r.text);
  }
  return out;
}

std::set<std::string> defined_in(std::string_view text) {
  std::set<std::string> out;
  const auto segs = math_segments(text);
  bool prev_defining = false;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs[k];
    const auto body = text.substr(s.body_begin, s.body_end - s.body_begin);
    const auto syms = math_symbols(body);
    const std::size_t prev_end = k == 0 ? 0 : segs[k - 1].end;
    const auto before = text.substr(prev_end, s.begin - prev_end);
    const std::size_t next_begin = k + 1 < segs.size() ? segs[k + 1].begin : text.size();
    std::string after = lower(text.substr(s.end, next_begin - s.end));
    after.erase(0, after.find_first_not_of(" \t\r\n,"));

    const auto rel = relation_at(body);
    const auto lhs = rel == std::string_view::npos ? syms : math_symbols(body.substr(0, rel));

    const std::string word = last_word(before);
    const std::string joined = lower(trimmed(before));
    bool defining = in(kBefore, word) || (prev_defining && (joined == "and" || joined == "," || joined == ", and"));
    if (defining) out.insert(lhs.begin(), lhs.end());
    prev_defining = defining;

    if (!syms.empty() && std::any_of(kAfter.begin(), kAfter.end(), [&](const char* p) { return after.starts_with(p); }))
      out.insert(lhs.empty() ? syms.front() : lhs.front());

    for (const char* def : {":=", "\\coloneqq", "\\triangleq"}) {
      const auto at = body.find(def);
      if (at == std::string_view::npos) continue;
      for (const auto& sym : math_symbols(body.substr(0, at))) out.insert(sym);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> undefined_symbols(std::string_view question, std::string_view answer) {
  std::set<std::string> known;
  for (const auto& s : math_segments(question))
    for (auto& sym : math_symbols(question.substr(s.body_begin, s.body_end - s.body_begin))) known.insert(sym);
  const auto defined = defined_in(answer);
  known.insert(defined.begin(), defined.end());
  std::vector<std::string> out;
  for (const auto& s : math_segments(answer))
    for (auto& sym : math_symbols(answer.substr(s.body_begin, s.body_end - s.body_begin)))
      if (!known.contains(sym)) add_unique(out, sym);
  return out;
}

SelfContainmentReport check_self_containment(std::string_view question, std::string_view answer) {
  SelfContainmentReport r;
  r.unresolved_references = unresolved(question);
  r.undefined_symbols = undefined_symbols(question, answer);
  return r;
}

nlohmann::json SelfContainmentReport::to_json() const {
  return nlohmann::json{{"passed", passed()},
                        {"unresolved_references", unresolved_references},
                        {"undefined_symbols", undefined_symbols}};
}

std::string SelfContainmentReport::summary() const {
  std::string out;
  auto list = [&](const char* what, const std::vector<std::string>& v) {
    if (v.empty()) return;
    if (!out.empty()) out += "; ";
    out += what;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : " ") + v[i];
  };
  list("unresolved references:", unresolved_references);
  list("undefined symbols:", undefined_symbols);
  return out.empty() ? "self-contained" : out;
}

bool embeds_latex(std::string_view text, std::string_view formula) {
  const auto needle = texmath::squash_whitespace(formula);
  if (needle.empty()) return true;
  if (texmath::squash_whitespace(text).find(needle) != std::string::npos) return true;
  const auto hay = texmath::squash_whitespace(texmath::canonicalize(text, texmath::CanonicalMode::text));
  return hay.find(texmath::squash_whitespace(texmath::canonicalize(formula))) != std::string::npos;
}

std::vector<std::string> dropped_needed_equations(std::string_view before, std::string_view after,
                                                  std::string_view question,
                                                  std::optional<std::string_view> target_latex) {
  std::set<std::string> cited;
  for (const std::string_view text : {after, question}) {
    for (const auto& r : numbered_references(text))
      if (r.formula) cited.insert(r.number);
    const auto masked = mask_math(text, math_segments(text));
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(), bare_number_re()); it != std::sregex_iterator();
         ++it)
      cited.insert((*it)[1].str());
  }
  std::vector<std::string> out;
  for (const auto& s : math_segments(before)) {
    if (!s.display) continue;
    const auto body = before.substr(s.body_begin, s.body_end - s.body_begin);
    const auto numbers = segment_numbers(before, s);
    const bool needed = std::any_of(numbers.begin(), numbers.end(), [&](const auto& n) { return cited.contains(n); });
    if (needed && !embeds_latex(after, body)) add_unique(out, texmath::canonicalize(body));
  }
  if (target_latex && embeds_latex(before, *target_latex) && !embeds_latex(after, *target_latex))
    add_unique(out, std::string(*target_latex));
  return out;
}

}  // namespace derivmine::agentflow
