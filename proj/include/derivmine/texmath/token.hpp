#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "derivmine/core/error.hpp"

namespace derivmine::texmath {

enum class TokenKind {
  command,
  begin_env,
  end_env,
  math_shift_inline,
  math_shift_display,
  text,
  comment,
  brace_open,
  brace_close,
};

std::string_view to_string(TokenKind k) noexcept;

struct Token {
  TokenKind kind = TokenKind::text;
  std::size_t begin = 0;  // byte offsets into the source, half-open
  std::size_t end = 0;
  // Command name without the backslash, or environment name.
  std::string name;
  // Math shifts only: true for the delimiter that opens math mode.
  bool opening = false;
  // begin_env -> its end_env; opening shift -> its closing shift; -1 if none.
  std::ptrdiff_t partner = -1;

  std::string_view slice(std::string_view source) const { return source.substr(begin, end - begin); }
};

struct Diagnostic {
  Errc code = Errc::UnbalancedEnvironment;
  std::string message;
  std::string file;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TokenStream {
  std::vector<Token> tokens;
  std::vector<Diagnostic> diagnostics;
};

}  // namespace derivmine::texmath
