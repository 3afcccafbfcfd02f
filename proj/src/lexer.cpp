#include "gpjit/lexer.hpp"

#include <cctype>
#include <charconv>

namespace gpjit::frontend {

const char* tok_kind_name(TokKind k) {
  switch (k) {
    case TokKind::IntLiteral: return "int literal";
    case TokKind::DoubleLiteral: return "double literal";
    case TokKind::Identifier: return "identifier";
    case TokKind::KwInt: return "'int'";
    case TokKind::KwDouble: return "'double'";
    case TokKind::KwReturn: return "'return'";
    case TokKind::LParen: return "'('";
    case TokKind::RParen: return "')'";
    case TokKind::LBrace: return "'{'";
    case TokKind::RBrace: return "'}'";
    case TokKind::Comma: return "','";
    case TokKind::Assign: return "'='";
    case TokKind::Plus: return "'+'";
    case TokKind::Minus: return "'-'";
    case TokKind::Star: return "'*'";
    case TokKind::Slash: return "'/'";
    case TokKind::Percent: return "'%'";
  }
  return "?";
}

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

void validate_utf8(std::string_view s) {
  int line = 1, col = 1;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    size_t len = 1;
    if (c < 0x80) {
      len = 1;
    } else if ((c >> 5) == 0x6) {
      len = 2;
    } else if ((c >> 4) == 0xE) {
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
    } else {
      throw LexError("invalid UTF-8 byte", {line, col});
    }
    if (i + len > s.size())
      throw LexError("truncated UTF-8 sequence", {line, col});
    for (size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(s[i + j]) >> 6) != 0x2)
        throw LexError("invalid UTF-8 continuation byte", {line, col});
    }
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    i += len;
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view source) {
  validate_utf8(source);

  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t j = 0; j < n; ++j) {
      if (source[i + j] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };

  while (i < source.size()) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < source.size() && source[i + 1] == '/') {
      size_t end = i;
      while (end < source.size() && source[end] != '\n') ++end;
      advance(end - i);
      continue;
    }

    int tline = line, tcol = col;
    if (is_digit(c)) {
      size_t end = i;
      while (end < source.size() && is_digit(source[end])) ++end;
      bool is_double = false;
      if (end + 1 < source.size() && source[end] == '.' &&
          is_digit(source[end + 1])) {
        is_double = true;
        ++end;
        while (end < source.size() && is_digit(source[end])) ++end;
      }
      std::string lexeme(source.substr(i, end - i));
      if (is_double) {
        out.push_back({TokKind::DoubleLiteral, lexeme, tline, tcol});
      } else {
        int64_t v = 0;
        auto [p, ec] =
            std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
        if (ec != std::errc{} || p != lexeme.data() + lexeme.size())
          throw LexError("integer literal does not fit 64 bits: " + lexeme,
                         {tline, tcol});
        out.push_back({TokKind::IntLiteral, lexeme, tline, tcol});
      }
      advance(end - i);
      continue;
    }
    if (is_ident_start(c)) {
      size_t end = i;
      while (end < source.size() && is_ident_char(source[end])) ++end;
      std::string lexeme(source.substr(i, end - i));
      TokKind kind = TokKind::Identifier;
      if (lexeme == "int") kind = TokKind::KwInt;
      else if (lexeme == "double") kind = TokKind::KwDouble;
      else if (lexeme == "return") kind = TokKind::KwReturn;
      out.push_back({kind, lexeme, tline, tcol});
      advance(end - i);
      continue;
    }

    TokKind kind;
    switch (c) {
      case '(': kind = TokKind::LParen; break;
      case ')': kind = TokKind::RParen; break;
      case '{': kind = TokKind::LBrace; break;
      case '}': kind = TokKind::RBrace; break;
      case ',': kind = TokKind::Comma; break;
      case '=': kind = TokKind::Assign; break;
      case '+': kind = TokKind::Plus; break;
      case '-': kind = TokKind::Minus; break;
      case '*': kind = TokKind::Star; break;
      case '/': kind = TokKind::Slash; break;
      case '%': kind = TokKind::Percent; break;
      default:
        throw LexError(std::string("unrecognized character '") + c + "'",
                       {tline, tcol});
    }
    out.push_back({kind, std::string(1, c), tline, tcol});
    advance(1);
  }
  return out;
}

}  // namespace gpjit::frontend
