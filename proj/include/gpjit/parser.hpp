#pragma once

#include <string_view>
#include <vector>

#include "gpjit/ast.hpp"
#include "gpjit/lexer.hpp"

namespace gpjit::frontend {

// Recursive-descent parser over the token stream. Statements are juxtaposed
// with no terminator; a declaration is a function iff '(' follows the
// declared name. Throws ParseError at the earliest offending token.
ast::Program parse(const std::vector<Token>& tokens);

// tokenize then parse; the first error wins.
ast::Program parse_source(std::string_view source);

}  // namespace gpjit::frontend
