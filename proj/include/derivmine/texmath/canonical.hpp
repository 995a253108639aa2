#pragma once

#include <string>
#include <string_view>

namespace derivmine::texmath {

// math: the whole string is math content (display formulas).
// text: only $...$, \(...\), \[...\], $$...$$ and display environments
// are math (theorem-like statements).
enum class CanonicalMode { math, text };

// Normal form used for duplicate detection and span checks:
//   - comments, \label{..}, \tag{..}, \tag*{..}, \nonumber, \notag removed
//   - a wrapping display delimiter ($$, \[ \], equation, align, ...) removed
//   - whitespace runs collapsed to one space and trimmed
//   - inside math, a space survives only between two alphanumerics or as a
//     control space ("\ ")
// Idempotent.
std::string canonicalize(std::string_view latex, CanonicalMode mode = CanonicalMode::math);

// Removes all whitespace; used for "is this formula embedded in that text"
// checks where spacing inside the embedding may differ.
std::string squash_whitespace(std::string_view s);

// Braces (unescaped) and \begin/\end pairs balance.
bool is_balanced(std::string_view latex);

}  // namespace derivmine::texmath
