#pragma once

#include <string>

#include "gpjit/ast.hpp"

namespace gpjit::frontend {

// Canonical unparser, the inverse of parse: for any generator-producible
// program p, parse_source(pretty_print(p)) is structurally equal to p.
// Parentheses are emitted only where precedence requires them; double
// literals use shortest round-trip fixed notation (never exponent form).
std::string pretty_print(const ast::Program& p);
std::string pretty_print(const ast::Expr& e);

}  // namespace gpjit::frontend
