#include "derivmine/texmath/extract.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "derivmine/texmath/canonical.hpp"
#include "derivmine/texmath/tokenizer.hpp"

namespace derivmine::texmath {

std::string_view to_string(ExpressionKind k) noexcept {
  switch (k) {
    case ExpressionKind::formula: return "formula";
    case ExpressionKind::lemma: return "lemma";
    case ExpressionKind::theorem: return "theorem";
    case ExpressionKind::corollary: return "corollary";
    case ExpressionKind::definition: return "definition";
    case ExpressionKind::proposition: return "proposition";
  }
  return "formula";
}

std::optional<ExpressionKind> parse_expression_kind(std::string_view s) noexcept {
  for (auto k : {ExpressionKind::formula, ExpressionKind::lemma, ExpressionKind::theorem, ExpressionKind::corollary,
                 ExpressionKind::definition, ExpressionKind::proposition})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

bool is_theorem_like(ExpressionKind k) noexcept { return k != ExpressionKind::formula; }

EnvironmentMap default_environment_map() {
  EnvironmentMap m;
  auto add = [&](const std::string& env, ExpressionKind kind, const std::string& display) {
    m[env] = TheoremEnv{kind, display, env, true, {}};
    m[env + "*"] = TheoremEnv{kind, display, env, false, {}};
  };
  add("theorem", ExpressionKind::theorem, "Theorem");
  add("lemma", ExpressionKind::lemma, "Lemma");
  add("corollary", ExpressionKind::corollary, "Corollary");
  add("definition", ExpressionKind::definition, "Definition");
  add("proposition", ExpressionKind::proposition, "Proposition");
  add("thm", ExpressionKind::theorem, "Theorem");
  add("lem", ExpressionKind::lemma, "Lemma");
  add("cor", ExpressionKind::corollary, "Corollary");
  add("coro", ExpressionKind::corollary, "Corollary");
  add("defn", ExpressionKind::definition, "Definition");
  add("def", ExpressionKind::definition, "Definition");
  add("prop", ExpressionKind::proposition, "Proposition");
  return m;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<ExpressionKind> classify_display_name(std::string_view name) {
  const auto l = lower(name);
  static constexpr std::array<std::pair<std::string_view, ExpressionKind>, 5> kWords{{
      {"lemma", ExpressionKind::lemma},
      {"theorem", ExpressionKind::theorem},
      {"corollary", ExpressionKind::corollary},
      {"definition", ExpressionKind::definition},
      {"proposition", ExpressionKind::proposition},
  }};
  for (const auto& [w, k] : kWords)
    if (l.find(w) != std::string::npos) return k;
  return std::nullopt;
}

struct Cursor {
  std::string_view s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size()) {
      if (is_space(s[i])) {
        ++i;
      } else if (s[i] == '%') {
        while (i < s.size() && s[i] != '\n') ++i;
      } else {
        break;
      }
    }
  }

  // Reads a delimited argument; returns nullopt if the next non-space char is
  // not `open`.
  std::optional<std::string_view> group(char open, char close) {
    const std::size_t save = i;
    skip_ws();
    if (i >= s.size() || s[i] != open) {
      i = save;
      return std::nullopt;
    }
    int depth = 0;
    const std::size_t start = i + 1;
    for (; i < s.size(); ++i) {
      if (s[i] == '\\') {
        ++i;
        continue;
      }
      if (s[i] == open) ++depth;
      else if (s[i] == close && --depth == 0) {
        ++i;
        return s.substr(start, i - 1 - start);
      }
    }
    i = save;
    return std::nullopt;
  }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::map<std::string, std::string> parse_keyvals(std::string_view opts) {
  std::map<std::string, std::string> out;
  std::size_t start = 0;
  while (start <= opts.size()) {
    auto comma = opts.find(',', start);
    if (comma == std::string_view::npos) comma = opts.size();
    const auto item = opts.substr(start, comma - start);
    const auto eq = item.find('=');
    if (eq != std::string_view::npos)
      out[std::string(trim(item.substr(0, eq)))] = std::string(trim(item.substr(eq + 1)));
    start = comma + 1;
  }
  return out;
}

bool comment_at(std::string_view s, std::size_t pos) {
  const auto line_start = s.rfind('\n', pos == 0 ? 0 : pos - 1);
  const std::size_t b = line_start == std::string_view::npos ? 0 : line_start + 1;
  for (std::size_t k = b; k < pos; ++k) {
    if (s[k] == '\\') {
      ++k;
      continue;
    }
    if (s[k] == '%') return true;
  }
  return false;
}

}  // namespace

void scan_theorem_definitions(std::string_view source, EnvironmentMap& envs) {
  auto counter_of = [&](const std::string& env) {
    const auto it = envs.find(env);
    return it == envs.end() ? env : it->second.counter;
  };
  for (std::size_t p = source.find('\\'); p != std::string_view::npos; p = source.find('\\', p + 1)) {
    const auto rest = source.substr(p + 1);
    const bool newthm = rest.starts_with("newtheorem");
    const bool declthm = rest.starts_with("declaretheorem");
    if ((!newthm && !declthm) || comment_at(source, p)) continue;
    Cursor c{source, p + 1 + (newthm ? 10 : 14)};
    if (c.i < source.size() && std::isalpha(static_cast<unsigned char>(source[c.i]))) continue;
    if (newthm) {
      bool starred = false;
      if (c.i < source.size() && source[c.i] == '*') {
        starred = true;
        ++c.i;
      }
      const auto name = c.group('{', '}');
      if (!name) continue;
      const auto shared = c.group('[', ']');
      const auto display = c.group('{', '}');
      if (!display) continue;
      const auto within = shared ? std::nullopt : c.group('[', ']');
      const auto kind = classify_display_name(*display);
      if (!kind) continue;
      TheoremEnv env;
      env.kind = *kind;
      env.display_name = std::string(trim(*display));
      env.numbered = !starred;
      env.counter = shared ? counter_of(std::string(trim(*shared))) : std::string(trim(*name));
      if (shared) {
        const auto it = envs.find(std::string(trim(*shared)));
        if (it != envs.end()) env.within = it->second.within;
      }
      if (within) env.within = std::string(trim(*within));
      envs[std::string(trim(*name))] = env;
      p = c.i == 0 ? p : c.i - 1;
    } else {
      const auto opts = c.group('[', ']');
      const auto names = c.group('{', '}');
      if (!names) continue;
      const auto kv = opts ? parse_keyvals(*opts) : std::map<std::string, std::string>{};
      std::size_t start = 0;
      while (start <= names->size()) {
        auto comma = names->find(',', start);
        if (comma == std::string_view::npos) comma = names->size();
        const std::string name(trim(names->substr(start, comma - start)));
        start = comma + 1;
        if (name.empty()) continue;
        std::string display = name;
        display[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(display[0])));
        if (auto it = kv.find("name"); it != kv.end()) display = it->second;
        const auto kind = classify_display_name(display);
        if (!kind) continue;
        TheoremEnv env{*kind, display, name, true, {}};
        if (auto it = kv.find("numbered"); it != kv.end() && it->second == "no") env.numbered = false;
        for (const char* key : {"sibling", "numberlike", "sharenumber"})
          if (auto it = kv.find(key); it != kv.end()) {
            env.counter = counter_of(it->second);
            if (auto s = envs.find(it->second); s != envs.end()) env.within = s->second.within;
          }
        for (const char* key : {"numberwithin", "parent"})
          if (auto it = kv.find(key); it != kv.end()) env.within = it->second;
        envs[name] = env;
      }
      p = c.i == 0 ? p : c.i - 1;
    }
  }
}

namespace {

enum class NumberRule { none, single, per_row };

struct DisplayEnv {
  std::string_view name;
  NumberRule rule;
};

constexpr std::array<DisplayEnv, 18> kDisplayEnvs{{
    {"equation", NumberRule::single},   {"equation*", NumberRule::none}, {"displaymath", NumberRule::none},
    {"align", NumberRule::per_row},     {"align*", NumberRule::none},    {"gather", NumberRule::per_row},
    {"gather*", NumberRule::none},      {"multline", NumberRule::single}, {"multline*", NumberRule::none},
    {"eqnarray", NumberRule::per_row},  {"eqnarray*", NumberRule::none}, {"flalign", NumberRule::per_row},
    {"flalign*", NumberRule::none},     {"alignat", NumberRule::per_row}, {"alignat*", NumberRule::none},
    {"math", NumberRule::none},         {"dmath", NumberRule::single},   {"dmath*", NumberRule::none},
}};

const DisplayEnv* find_display_env(std::string_view name) {
  for (const auto& e : kDisplayEnvs)
    if (e.name == name) return &e;
  return nullptr;
}

// A number slot: automatic (consumes the counter) or an explicit tag.
struct NumberSlot {
  bool automatic = true;
  std::string tag;  // already formatted when !automatic
};

struct RowInfo {
  bool suppressed = false;
  std::optional<std::string> tag;
  bool has_content = false;
};

// Top-level rows of an environment body, split on \\ outside braces and
// nested environments.
std::vector<RowInfo> scan_rows(std::string_view body) {
  std::vector<RowInfo> rows(1);
  int depth = 0;
  int envs = 0;
  Cursor c{body, 0};
  while (c.i < body.size()) {
    const char ch = body[c.i];
    if (ch == '%') {
      while (c.i < body.size() && body[c.i] != '\n') ++c.i;
      continue;
    }
    if (ch == '{') {
      ++depth;
    } else if (ch == '}') {
      --depth;
    } else if (ch == '\\' && c.i + 1 < body.size()) {
      const char nx = body[c.i + 1];
      if (nx == '\\') {
        if (depth == 0 && envs == 0) rows.emplace_back();
        else rows.back().has_content = true;
        c.i += 2;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(nx))) {
        std::size_t e = c.i + 1;
        while (e < body.size() && std::isalpha(static_cast<unsigned char>(body[e]))) ++e;
        const auto name = body.substr(c.i + 1, e - c.i - 1);
        c.i = e;
        if (name == "begin") ++envs;
        else if (name == "end") --envs;
        if (envs == 0 && depth == 0) {
          if (name == "nonumber" || name == "notag") {
            rows.back().suppressed = true;
            continue;
          }
          if (name == "tag") {
            bool starred = false;
            if (c.i < body.size() && body[c.i] == '*') {
              starred = true;
              ++c.i;
            }
            if (auto g = c.group('{', '}')) {
              const std::string t(trim(*g));
              rows.back().tag = starred ? t : "(" + t + ")";
            }
            continue;
          }
          if (name == "label") {
            c.group('{', '}');
            continue;
          }
        }
        rows.back().has_content = true;
        continue;
      }
      rows.back().has_content = true;
      c.i += 2;
      continue;
    }
    if (!is_space(ch)) rows.back().has_content = true;
    ++c.i;
  }
  return rows;
}

std::vector<NumberSlot> number_slots(std::string_view body, NumberRule rule) {
  std::vector<NumberSlot> slots;
  const auto rows = scan_rows(body);
  if (rule == NumberRule::per_row) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      // A trailing \\ leaves an empty last row that amsmath does not number.
      if (!row.has_content && !row.tag && r + 1 == rows.size() && r > 0) continue;
      if (row.tag) slots.push_back({false, *row.tag});
      else if (!row.suppressed) slots.push_back({true, {}});
    }
    return slots;
  }
  std::optional<std::string> tag;
  bool suppressed = false;
  for (const auto& row : rows) {
    if (row.tag && !tag) tag = row.tag;
    suppressed = suppressed || row.suppressed;
  }
  if (tag) slots.push_back({false, *tag});
  else if (rule == NumberRule::single && !suppressed) slots.push_back({true, {}});
  return slots;
}

std::optional<std::string> first_label(std::string_view raw) {
  for (std::size_t p = raw.find("\\label"); p != std::string_view::npos; p = raw.find("\\label", p + 1)) {
    if (comment_at(raw, p)) continue;
    Cursor c{raw, p + 6};
    if (auto g = c.group('{', '}')) return std::string(trim(*g));
  }
  return std::nullopt;
}

// Per-file output of the parallel pass; numbering happens afterwards.
struct Event {
  enum class Type { expression, section, appendix } type = Type::expression;
  MathExpression expr;
  std::vector<NumberSlot> slots;  // formulas
  std::string theorem_env;        // theorem-like
};

struct FileScan {
  std::vector<Event> events;
  std::size_t skipped_inline = 0;
  std::vector<Diagnostic> diagnostics;
};

bool is_ws_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

struct SpanTrim {
  std::size_t begin, end;
};

SpanTrim trim_span(std::string_view src, std::size_t b, std::size_t e) {
  while (b < e && is_space(src[b])) ++b;
  while (e > b && is_space(src[e - 1])) --e;
  return {b, e};
}

FileScan scan_file(const TokenStream& ts, std::string_view src, const std::string& file, const EnvironmentMap& envs) {
  FileScan out;
  for (auto d : ts.diagnostics) {
    d.file = file;
    out.diagnostics.push_back(std::move(d));
  }
  const auto& toks = ts.tokens;
  std::vector<std::size_t> theorem_ends;

  auto emit = [&](ExpressionKind kind, std::size_t b, std::size_t e, CanonicalMode mode) -> Event* {
    const auto raw = src.substr(b, e - b);
    auto latex = canonicalize(raw, mode);
    if (latex.empty()) return nullptr;
    if (!is_balanced(latex)) {
      out.diagnostics.push_back({Errc::UnbalancedEnvironment, "unbalanced expression dropped", file, b, e});
      return nullptr;
    }
    Event ev;
    ev.expr.kind = kind;
    ev.expr.latex = std::move(latex);
    ev.expr.tex_label = first_label(raw);
    ev.expr.source_span = {file, b, e};
    ev.expr.display = true;
    out.events.push_back(std::move(ev));
    return &out.events.back();
  };

  for (std::size_t i = 0; i < toks.size(); ++i) {
    while (!theorem_ends.empty() && theorem_ends.back() <= i) theorem_ends.pop_back();
    const auto& t = toks[i];
    const auto partner = t.partner;
    switch (t.kind) {
      case TokenKind::begin_env: {
        if (partner < 0 || static_cast<std::size_t>(partner) <= i) break;
        const auto& end_tok = toks[static_cast<std::size_t>(partner)];
        if (const auto* de = find_display_env(t.name)) {
          if (Event* ev = emit(ExpressionKind::formula, t.begin, end_tok.end, CanonicalMode::math)) {
            auto body = src.substr(t.end, end_tok.begin - t.end);
            if (t.name.starts_with("alignat")) {
              Cursor c{body, 0};
              if (c.group('{', '}')) body = body.substr(c.i);
            }
            ev->slots = number_slots(body, de->rule);
          }
          i = static_cast<std::size_t>(partner);
          break;
        }
        const auto it = envs.find(t.name);
        if (it == envs.end()) break;
        std::size_t b = t.end;
        Cursor c{src, b};
        if (c.group('[', ']')) b = c.i;
        const auto span = trim_span(src, b, end_tok.begin);
        if (Event* ev = emit(it->second.kind, span.begin, span.end, CanonicalMode::text)) ev->theorem_env = t.name;
        theorem_ends.push_back(static_cast<std::size_t>(partner));
        break;
      }
      case TokenKind::math_shift_display: {
        if (!t.opening || partner < 0 || static_cast<std::size_t>(partner) <= i) break;
        const auto& close = toks[static_cast<std::size_t>(partner)];
        if (Event* ev = emit(ExpressionKind::formula, t.begin, close.end, CanonicalMode::math))
          ev->slots = number_slots(src.substr(t.end, close.begin - t.end), NumberRule::none);
        i = static_cast<std::size_t>(partner);
        break;
      }
      case TokenKind::math_shift_inline: {
        if (!t.opening || partner < 0 || static_cast<std::size_t>(partner) <= i) break;
        const auto& close = toks[static_cast<std::size_t>(partner)];
        if (theorem_ends.empty() && !is_ws_only(src.substr(t.end, close.begin - t.end))) ++out.skipped_inline;
        i = static_cast<std::size_t>(partner);
        break;
      }
      case TokenKind::command: {
        if (t.name == "section" && !(t.end < src.size() && src[t.end] == '*')) {
          Event ev;
          ev.type = Event::Type::section;
          out.events.push_back(std::move(ev));
        } else if (t.name == "appendix") {
          Event ev;
          ev.type = Event::Type::appendix;
          out.events.push_back(std::move(ev));
        }
        break;
      }
      default: break;
    }
  }
  return out;
}

bool equation_within_section(std::string_view source) {
  for (std::size_t p = source.find("\\numberwithin"); p != std::string_view::npos;
       p = source.find("\\numberwithin", p + 1)) {
    if (comment_at(source, p)) continue;
    Cursor c{source, p + 13};
    const auto counter = c.group('{', '}');
    const auto parent = c.group('{', '}');
    if (counter && parent && trim(*counter) == "equation" && trim(*parent) == "section") return true;
  }
  return false;
}

std::string section_label(std::size_t section, bool appendix, std::size_t appendix_start) {
  if (appendix && section > appendix_start) {
    std::size_t n = section - appendix_start;
    std::string letters;
    while (n > 0) {
      --n;
      letters.insert(letters.begin(), static_cast<char>('A' + n % 26));
      n /= 26;
    }
    return letters;
  }
  return std::to_string(section);
}

ExtractionReport finalize(std::vector<FileScan> scans, const EnvironmentMap& envs, bool eq_within_section,
                          const std::string& id_prefix) {
  ExtractionReport report;
  std::size_t section = 0;
  bool appendix = false;
  std::size_t appendix_start = 0;
  std::size_t equation = 0;
  std::map<std::string, std::size_t> counters;
  std::vector<MathExpression> all;

  auto prefix = [&](const std::string& within) -> std::string {
    if (within != "section") return {};
    return section_label(section, appendix, appendix_start) + ".";
  };

  for (auto& scan : scans) {
    report.skipped_inline += scan.skipped_inline;
    for (auto& d : scan.diagnostics) report.diagnostics.push_back(std::move(d));
    for (auto& ev : scan.events) {
      switch (ev.type) {
        case Event::Type::section: {
          ++section;
          if (eq_within_section) equation = 0;
          for (const auto& [name, env] : envs)
            if (env.within == "section") counters[env.counter] = 0;
          break;
        }
        case Event::Type::appendix:
          appendix = true;
          appendix_start = section;
          break;
        case Event::Type::expression: {
          if (ev.expr.kind == ExpressionKind::formula) {
            std::string label;
            for (const auto& slot : ev.slots) {
              if (!label.empty()) label += ", ";
              if (slot.automatic)
                label += "(" + (eq_within_section ? prefix("section") : std::string{}) + std::to_string(++equation) +
                         ")";
              else
                label += slot.tag;
            }
            if (!label.empty()) ev.expr.number_label = label;
          } else {
            const auto& env = envs.at(ev.theorem_env);
            if (env.numbered)
              ev.expr.number_label = env.display_name + " " + prefix(env.within) + std::to_string(++counters[env.counter]);
          }
          all.push_back(std::move(ev.expr));
          break;
        }
      }
    }
  }
  report.expressions = dedup(std::move(all), &report.duplicates_merged);
  for (std::size_t k = 0; k < report.expressions.size(); ++k)
    report.expressions[k].expr_id = id_prefix + std::to_string(k + 1);
  return report;
}

EnvironmentMap document_environments(std::span<const SourceText> files, const ExtractOptions& options) {
  EnvironmentMap envs = options.environments;
  if (options.scan_preamble)
    for (const auto& f : files) scan_theorem_definitions(f.text, envs);
  return envs;
}

bool document_equation_within_section(std::span<const SourceText> files) {
  return std::any_of(files.begin(), files.end(), [](const SourceText& f) { return equation_within_section(f.text); });
}

}  // namespace

ExtractionReport extract_expressions(const TokenStream& tokens, std::string_view source, const std::string& file,
                                     const ExtractOptions& options) {
  const SourceText one{file, source};
  const auto envs = document_environments({&one, 1}, options);
  std::vector<FileScan> scans;
  scans.push_back(scan_file(tokens, source, file, envs));
  return finalize(std::move(scans), envs, equation_within_section(source), options.id_prefix);
}

ExtractionReport extract_document(std::span<const SourceText> files, const ExtractOptions& options) {
  const auto envs = document_environments(files, options);
  std::vector<FileScan> scans(files.size());
  const auto n = static_cast<std::ptrdiff_t>(files.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& f = files[static_cast<std::size_t>(k)];
    scans[static_cast<std::size_t>(k)] = scan_file(tokenize_latex(f.text), f.text, f.path, envs);
  }
  return finalize(std::move(scans), envs, document_equation_within_section(files), options.id_prefix);
}

ExtractionReport extract_document_serial(std::span<const SourceText> files, const ExtractOptions& options) {
  const auto envs = document_environments(files, options);
  std::vector<FileScan> scans;
  scans.reserve(files.size());
  for (const auto& f : files) scans.push_back(scan_file(tokenize_latex(f.text), f.text, f.path, envs));
  return finalize(std::move(scans), envs, document_equation_within_section(files), options.id_prefix);
}

std::vector<MathExpression> dedup(std::vector<MathExpression> expressions, std::size_t* merged) {
  std::vector<MathExpression> kept;
  std::map<std::string, std::size_t> index;
  std::size_t dropped = 0;
  for (auto& e : expressions) {
    const auto [it, inserted] = index.emplace(e.latex, kept.size());
    if (inserted) {
      kept.push_back(std::move(e));
      continue;
    }
    ++dropped;
    auto& first = kept[it->second];
    if (!first.number_label && e.number_label) first.number_label = e.number_label;
    if (!first.tex_label && e.tex_label) first.tex_label = e.tex_label;
  }
  if (merged) *merged += dropped;
  return kept;
}

nlohmann::json to_json(const MathExpression& e) {
  nlohmann::json j{{"expr_id", e.expr_id},
                   {"kind", to_string(e.kind)},
                   {"latex", e.latex},
                   {"number_label", e.number_label ? nlohmann::json(*e.number_label) : nlohmann::json(nullptr)},
                   {"file", e.source_span.file},
                   {"start", e.source_span.begin},
                   {"end", e.source_span.end},
                   {"display", e.display}};
  if (e.tex_label) j["tex_label"] = *e.tex_label;
  return j;
}

MathExpression expression_from_json(const nlohmann::json& j) {
  MathExpression e;
  e.expr_id = j.at("expr_id").get<std::string>();
  const auto kind = parse_expression_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::SchemaViolation, "unknown expression kind " + j.at("kind").dump());
  e.kind = *kind;
  e.latex = j.at("latex").get<std::string>();
  if (j.contains("number_label") && !j["number_label"].is_null()) e.number_label = j["number_label"].get<std::string>();
  if (j.contains("tex_label") && !j["tex_label"].is_null()) e.tex_label = j["tex_label"].get<std::string>();
  e.source_span.file = j.value("file", std::string{});
  e.source_span.begin = j.value("start", std::size_t{0});
  e.source_span.end = j.value("end", std::size_t{0});
  e.display = j.value("display", true);
  return e;
}

std::string to_jsonl(const ExtractionReport& report) {
  std::string out;
  for (const auto& e : report.expressions) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

}  // namespace derivmine::texmath
