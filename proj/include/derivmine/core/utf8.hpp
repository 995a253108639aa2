#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace derivmine::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes the code point starting at text[pos] and advances pos past it.
// Malformed sequences yield U+FFFD and consume one byte.
char32_t next(std::string_view text, std::size_t& pos) noexcept;

bool valid(std::string_view text) noexcept;
void append(std::string& out, char32_t cp);

}  // namespace derivmine::utf8
