#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gpjit/errors.hpp"

namespace gpjit::frontend {

enum class TokKind {
  IntLiteral,
  DoubleLiteral,
  Identifier,
  KwInt,
  KwDouble,
  KwReturn,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Assign,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
};

const char* tok_kind_name(TokKind k);

struct Token {
  TokKind kind;
  std::string lexeme;
  int line = 1;    // 1-based, first character of the lexeme
  int column = 1;  // 1-based
};

// Splits source text into tokens. Whitespace and // line comments are
// skipped; maximal munch applies. Throws LexError on an unrecognized
// character, a malformed number, an out-of-range int literal, or invalid
// UTF-8 anywhere in the input.
std::vector<Token> tokenize(std::string_view source);

}  // namespace gpjit::frontend
