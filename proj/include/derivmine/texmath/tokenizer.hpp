#pragma once

#include <string_view>

#include "derivmine/texmath/token.hpp"

namespace derivmine::texmath {

// Lossless LaTeX lexer: token spans tile the whole source, comments
// included. Environment and math-shift pairs are resolved into
// Token::partner. Unmatched \begin / \end and unterminated math produce
// diagnostics; lexing always runs to the end of the input.
//
// Bodies of verbatim-like environments (verbatim, lstlisting, comment,
// minted) are kept as a single text token.
TokenStream tokenize_latex(std::string_view source);

}  // namespace derivmine::texmath
