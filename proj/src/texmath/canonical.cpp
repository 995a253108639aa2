#include "derivmine/texmath/canonical.hpp"

#include <array>
#include <cctype>

namespace derivmine::texmath {

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
// Non-ASCII bytes count as alphanumeric so spacing between Unicode letters survives.
bool is_alnum_byte(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
}

constexpr std::array<std::string_view, 17> kDisplayEnvs{
    "equation", "equation*", "displaymath", "align",    "align*",   "gather",  "gather*",  "multline", "multline*",
    "eqnarray", "eqnarray*", "flalign",     "flalign*", "alignat",  "alignat*", "dmath",   "dmath*"};

bool is_display_env(std::string_view name) {
  for (auto n : kDisplayEnvs)
    if (n == name) return true;
  return false;
}

// Skips a balanced {...} group starting at s[i] == '{'; returns the index
// just past it (or s.size() if unbalanced).
std::size_t skip_group(std::string_view s, std::size_t i) {
  int depth = 0;
  for (; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    else if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return s.size();
}

// Comments, \label, \tag, \nonumber and \notag removed; everything else
// copied byte for byte.
std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '%') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (c != '\\') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (i + 1 >= s.size() || !is_letter(s[i + 1])) {
      out.append(s.substr(i, std::min<std::size_t>(2, s.size() - i)));
      i += 2;
      continue;
    }
    std::size_t e = i + 1;
    while (e < s.size() && is_letter(s[e])) ++e;
    const auto name = s.substr(i + 1, e - i - 1);
    if (name == "label" || name == "tag") {
      std::size_t k = e;
      if (name == "tag" && k < s.size() && s[k] == '*') ++k;
      while (k < s.size() && is_space(s[k])) ++k;
      if (k < s.size() && s[k] == '{') {
        i = skip_group(s, k);
        continue;
      }
    } else if (name == "nonumber" || name == "notag") {
      i = e;
      continue;
    }
    out.append(s.substr(i, e - i));
    i = e;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

// Removes one wrapping display delimiter pair if the whole string is wrapped.
bool unwrap_once(std::string_view& s) {
  s = trim(s);
  if (s.size() >= 4 && s.starts_with("$$") && s.ends_with("$$")) {
    const auto inner = s.substr(2, s.size() - 4);
    if (inner.find("$$") == std::string_view::npos) {
      s = inner;
      return true;
    }
  }
  if (s.size() >= 4 && s.starts_with("\\[") && s.ends_with("\\]")) {
    const auto inner = s.substr(2, s.size() - 4);
    if (inner.find("\\]") == std::string_view::npos) {
      s = inner;
      return true;
    }
  }
  if (s.starts_with("\\begin{")) {
    const auto close = s.find('}');
    if (close == std::string_view::npos) return false;
    const auto env = s.substr(7, close - 7);
    if (!is_display_env(env)) return false;
    const std::string open_tag = "\\begin{" + std::string(env) + "}";
    const std::string end_tag = "\\end{" + std::string(env) + "}";
    if (!s.ends_with(end_tag)) return false;
    auto inner = s.substr(open_tag.size(), s.size() - open_tag.size() - end_tag.size());
    if (count(inner, open_tag) != count(inner, end_tag)) return false;
    if (env.starts_with("alignat")) {
      auto t = trim(inner);
      if (t.starts_with("{")) {
        const auto k = skip_group(t, 0);
        inner = t.substr(k);
      }
    }
    s = inner;
    return true;
  }
  return false;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

bool ends_with_control_backslash(std::string_view out) {
  std::size_t n = 0;
  for (auto it = out.rbegin(); it != out.rend() && *it == '\\'; ++it) ++n;
  return n % 2 == 1;
}

// Input is whitespace-collapsed. Drops spaces that TeX ignores in math.
void tighten_math(std::string_view s, std::string& out) {
  const std::size_t base = out.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != ' ') {
      out.push_back(c);
      continue;
    }
    const std::string_view emitted(out.data() + base, out.size() - base);
    if (ends_with_control_backslash(emitted)) {
      out.push_back(' ');
      continue;
    }
    const bool prev_alnum = !emitted.empty() && is_alnum_byte(emitted.back());
    const bool next_alnum = i + 1 < s.size() && is_alnum_byte(s[i + 1]);
    if (prev_alnum && next_alnum) out.push_back(' ');
  }
}

// Tightens only the math segments of running text.
std::string tighten_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    std::string_view open, close;
    std::string env_close;
    if (s.substr(i).starts_with("\\begin{")) {
      const auto r = s.find('}', i);
      const auto env = r == std::string_view::npos ? std::string_view{} : s.substr(i + 7, r - i - 7);
      if (is_display_env(env)) {
        env_close = "\\end{" + std::string(env) + "}";
        const auto found = s.find(env_close, r);
        if (found != std::string_view::npos) {
          out.append(s.substr(i, r + 1 - i));
          tighten_math(trim(s.substr(r + 1, found - r - 1)), out);
          out.append(env_close);
          i = found + env_close.size();
          continue;
        }
      }
    }
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == '(') open = "\\(", close = "\\)";
      else if (s[i + 1] == '[') open = "\\[", close = "\\]";
      else {
        out.append(s.substr(i, 2));
        i += 2;
        continue;
      }
    } else if (s[i] == '$') {
      if (i + 1 < s.size() && s[i + 1] == '$') open = "$$", close = "$$";
      else open = "$", close = "$";
    }
    if (open.empty()) {
      out.push_back(s[i++]);
      continue;
    }
    // Find the unescaped closing delimiter.
    std::size_t j = i + open.size();
    std::size_t found = std::string_view::npos;
    while (j < s.size()) {
      if (s[j] == '\\') {
        if (close[0] == '\\' && s.substr(j, 2) == close) {
          found = j;
          break;
        }
        j += 2;
        continue;
      }
      if (close[0] == '$' && s.substr(j, close.size()) == close) {
        found = j;
        break;
      }
      ++j;
    }
    if (found == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(open);
    tighten_math(trim(s.substr(i + open.size(), found - i - open.size())), out);
    out.append(close);
    i = found + close.size();
  }
  return out;
}

}  // namespace

std::string canonicalize(std::string_view latex, CanonicalMode mode) {
  const std::string stripped = strip_markup(latex);
  std::string_view body = stripped;
  while (unwrap_once(body)) {
  }
  const std::string collapsed = collapse_whitespace(trim(body));
  if (mode == CanonicalMode::text) return tighten_text(collapsed);
  std::string out;
  out.reserve(collapsed.size());
  tighten_math(collapsed, out);
  return out;
}

std::string squash_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (!is_space(c)) out.push_back(c);
  return out;
}

bool is_balanced(std::string_view s) {
  long depth = 0;
  long envs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\') {
      if (s.substr(i, 7) == "\\begin{") ++envs;
      else if (s.substr(i, 5) == "\\end{" && --envs < 0) return false;
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    else if (s[i] == '}' && --depth < 0) return false;
  }
  return depth == 0 && envs == 0;
}

}  // namespace derivmine::texmath
