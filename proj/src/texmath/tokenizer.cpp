#include "derivmine/texmath/tokenizer.hpp"

#include <array>
#include <cctype>

namespace derivmine::texmath {

std::string_view to_string(TokenKind k) noexcept {
  switch (k) {
    case TokenKind::command: return "command";
    case TokenKind::begin_env: return "begin_env";
    case TokenKind::end_env: return "end_env";
    case TokenKind::math_shift_inline: return "math_shift_inline";
    case TokenKind::math_shift_display: return "math_shift_display";
    case TokenKind::text: return "text";
    case TokenKind::comment: return "comment";
    case TokenKind::brace_open: return "brace_open";
    case TokenKind::brace_close: return "brace_close";
  }
  return "text";
}

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_verbatim_env(std::string_view name) {
  static constexpr std::array<std::string_view, 7> kNames{"verbatim", "verbatim*", "Verbatim", "lstlisting",
                                                          "comment",  "minted",    "filecontents"};
  for (auto n : kNames)
    if (n == name) return true;
  return false;
}

enum class MathState { none, inline_dollar, inline_paren, display_dollar, display_bracket };

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenStream run() {
    while (pos_ < src_.size()) step();
    flush_text();
    for (auto idx : env_stack_) unmatched_begin(idx);
    if (state_ != MathState::none) unterminated_math();
    return std::move(out_);
  }

 private:
  void step() {
    const char c = src_[pos_];
    switch (c) {
      case '%': lex_comment(); break;
      case '\\': lex_backslash(); break;
      case '{': simple(TokenKind::brace_open, 1); break;
      case '}': simple(TokenKind::brace_close, 1); break;
      case '$': lex_dollar(); break;
      default:
        if (text_begin_ == npos) text_begin_ = pos_;
        ++pos_;
    }
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void flush_text() {
    if (text_begin_ == npos) return;
    const std::size_t b = text_begin_;
    text_begin_ = npos;
    push(Token{TokenKind::text, b, pos_, {}, false, -1});
    // TeX ends a paragraph at a blank line; math cannot span one.
    if (state_ != MathState::none && has_blank_line(src_.substr(b, pos_ - b))) unterminated_math();
  }

  static bool has_blank_line(std::string_view s) {
    for (std::size_t i = s.find('\n'); i != std::string_view::npos; i = s.find('\n', i + 1)) {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
      if (j < s.size() && s[j] == '\n') return true;
    }
    return false;
  }

  std::size_t push(Token t) {
    out_.tokens.push_back(std::move(t));
    return out_.tokens.size() - 1;
  }

  void simple(TokenKind kind, std::size_t len) {
    flush_text();
    push(Token{kind, pos_, pos_ + len, {}, false, -1});
    pos_ += len;
  }

  void lex_comment() {
    flush_text();
    std::size_t e = src_.find('\n', pos_);
    if (e == std::string_view::npos) e = src_.size();
    push(Token{TokenKind::comment, pos_, e, {}, false, -1});
    pos_ = e;
  }

  void open_shift(TokenKind kind, std::size_t len, MathState next) {
    flush_text();
    open_shift_ = push(Token{kind, pos_, pos_ + len, {}, true, -1});
    state_ = next;
    pos_ += len;
  }

  void close_shift(TokenKind kind, std::size_t len) {
    flush_text();
    const auto idx = push(Token{kind, pos_, pos_ + len, {}, false, -1});
    if (open_shift_ != npos) {
      out_.tokens[open_shift_].partner = static_cast<std::ptrdiff_t>(idx);
      out_.tokens[idx].partner = static_cast<std::ptrdiff_t>(open_shift_);
    }
    open_shift_ = npos;
    state_ = MathState::none;
    pos_ += len;
  }

  void lex_dollar() {
    flush_text();  // may end math at a blank line
    const bool doubled = pos_ + 1 < src_.size() && src_[pos_ + 1] == '$';
    switch (state_) {
      case MathState::none:
        if (doubled) open_shift(TokenKind::math_shift_display, 2, MathState::display_dollar);
        else open_shift(TokenKind::math_shift_inline, 1, MathState::inline_dollar);
        break;
      case MathState::inline_dollar: close_shift(TokenKind::math_shift_inline, 1); break;
      case MathState::display_dollar: close_shift(TokenKind::math_shift_display, doubled ? 2 : 1); break;
      default:
        // A dollar inside \( \) or \[ \] is literal material.
        if (text_begin_ == npos) text_begin_ = pos_;
        ++pos_;
    }
  }

  void lex_backslash() {
    flush_text();
    const std::size_t start = pos_;
    if (pos_ + 1 >= src_.size()) {
      push(Token{TokenKind::command, start, src_.size(), {}, false, -1});
      pos_ = src_.size();
      return;
    }
    const char next = src_[pos_ + 1];
    if (!is_letter(next)) {
      lex_control_symbol(next);
      return;
    }
    std::size_t e = pos_ + 1;
    while (e < src_.size() && is_letter(src_[e])) ++e;
    std::string name(src_.substr(pos_ + 1, e - pos_ - 1));
    if (name == "begin" || name == "end") {
      std::size_t k = e;
      while (k < src_.size() && (src_[k] == ' ' || src_[k] == '\t')) ++k;
      if (k < src_.size() && src_[k] == '{') {
        const std::size_t close = src_.find('}', k);
        if (close != std::string_view::npos && src_.substr(k, close - k).find('\n') == std::string_view::npos) {
          std::string env(src_.substr(k + 1, close - k - 1));
          pos_ = close + 1;
          if (name == "begin") begin_env(start, std::move(env));
          else end_env(start, std::move(env));
          return;
        }
      }
    }
    if ((name == "verb") && e < src_.size()) {
      std::size_t d = e;
      if (src_[d] == '*') ++d;
      if (d < src_.size() && !std::isspace(static_cast<unsigned char>(src_[d])) && !is_letter(src_[d])) {
        const std::size_t close = src_.find(src_[d], d + 1);
        const std::size_t eol = src_.find('\n', d + 1);
        if (close != std::string_view::npos && (eol == std::string_view::npos || close < eol)) {
          push(Token{TokenKind::command, start, close + 1, name, false, -1});
          pos_ = close + 1;
          return;
        }
      }
    }
    push(Token{TokenKind::command, start, e, std::move(name), false, -1});
    pos_ = e;
  }

  void lex_control_symbol(char next) {
    if (next == '[' && state_ == MathState::none) {
      open_shift(TokenKind::math_shift_display, 2, MathState::display_bracket);
    } else if (next == ']' && state_ == MathState::display_bracket) {
      close_shift(TokenKind::math_shift_display, 2);
    } else if (next == '(' && state_ == MathState::none) {
      open_shift(TokenKind::math_shift_inline, 2, MathState::inline_paren);
    } else if (next == ')' && state_ == MathState::inline_paren) {
      close_shift(TokenKind::math_shift_inline, 2);
    } else {
      // Control symbol: backslash plus one (possibly multi-byte) character.
      std::size_t len = 2;
      const auto b = static_cast<unsigned char>(next);
      if (b >= 0xC0) len += (b >= 0xF0) ? 3 : (b >= 0xE0) ? 2 : 1;
      len = std::min(len, src_.size() - pos_);
      push(Token{TokenKind::command, pos_, pos_ + len, std::string(src_.substr(pos_ + 1, len - 1)), false, -1});
      pos_ += len;
    }
  }

  void begin_env(std::size_t start, std::string env) {
    const auto idx = push(Token{TokenKind::begin_env, start, pos_, env, false, -1});
    if (is_verbatim_env(env)) {
      const std::string terminator = "\\end{" + env + "}";
      const std::size_t close = src_.find(terminator, pos_);
      if (close == std::string_view::npos) {
        unmatched_begin(idx);
        return;  // keep lexing normally; the body is not verbatim after all
      }
      if (close > pos_) push(Token{TokenKind::text, pos_, close, {}, false, -1});
      const auto end_idx = push(Token{TokenKind::end_env, close, close + terminator.size(), env, false, -1});
      out_.tokens[idx].partner = static_cast<std::ptrdiff_t>(end_idx);
      out_.tokens[end_idx].partner = static_cast<std::ptrdiff_t>(idx);
      pos_ = close + terminator.size();
      return;
    }
    env_stack_.push_back(idx);
  }

  void end_env(std::size_t start, std::string env) {
    const auto idx = push(Token{TokenKind::end_env, start, pos_, env, false, -1});
    for (std::size_t k = env_stack_.size(); k-- > 0;) {
      if (out_.tokens[env_stack_[k]].name != env) continue;
      for (std::size_t j = k + 1; j < env_stack_.size(); ++j) unmatched_begin(env_stack_[j]);
      const auto open = env_stack_[k];
      out_.tokens[open].partner = static_cast<std::ptrdiff_t>(idx);
      out_.tokens[idx].partner = static_cast<std::ptrdiff_t>(open);
      env_stack_.resize(k);
      return;
    }
    out_.diagnostics.push_back(
        {Errc::UnbalancedEnvironment, "\\end{" + env + "} without matching \\begin", {}, start, pos_});
  }

  void unmatched_begin(std::size_t idx) {
    const auto& t = out_.tokens[idx];
    out_.diagnostics.push_back(
        {Errc::UnbalancedEnvironment, "\\begin{" + t.name + "} without matching \\end", {}, t.begin, t.end});
  }

  void unterminated_math() {
    std::size_t b = open_shift_ == npos ? pos_ : out_.tokens[open_shift_].begin;
    std::size_t e = open_shift_ == npos ? pos_ : out_.tokens[open_shift_].end;
    out_.diagnostics.push_back({Errc::UnbalancedEnvironment, "unterminated math shift", {}, b, e});
    open_shift_ = npos;
    state_ = MathState::none;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t text_begin_ = npos;
  MathState state_ = MathState::none;
  std::size_t open_shift_ = npos;
  std::vector<std::size_t> env_stack_;
  TokenStream out_;
};

}  // namespace

TokenStream tokenize_latex(std::string_view source) { return Lexer(source).run(); }

}  // namespace derivmine::texmath
