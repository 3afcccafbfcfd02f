#include "gpjit/parser.hpp"

#include <charconv>

#include "gpjit/hooks.hpp"

namespace gpjit::frontend {

using namespace ast;

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  Program parse_program() {
    Program p;
    while (!at_end()) p.top_level.push_back(parse_stmt(/*top_level=*/true));
    return p;
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }

  const Token* peek(size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }

  const Token& advance() { return toks_[pos_++]; }

  bool check(TokKind k) const {
    const Token* t = peek();
    return t && t->kind == k;
  }

  SrcLoc loc_here() const {
    if (const Token* t = peek()) return {t->line, t->column};
    if (!toks_.empty()) {
      const Token& last = toks_.back();
      return {last.line, last.column + int(last.lexeme.size())};
    }
    return {1, 1};
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string found =
        at_end() ? "end of input" : "'" + peek()->lexeme + "'";
    std::string msg = "expected ";
    for (size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += expected.size() == 2 ? " or " : ", ";
      msg += expected[i];
    }
    msg += ", found " + found;
    throw ParseError(std::move(msg), loc_here(), std::move(expected));
  }

  Token expect(TokKind k) {
    if (!check(k)) fail({tok_kind_name(k)});
    return advance();
  }

  StmtPtr parse_stmt(bool top_level) {
    SrcLoc loc = loc_here();
    if (check(TokKind::KwInt) || check(TokKind::KwDouble)) {
      TypeTag tag =
          advance().kind == TokKind::KwInt ? TypeTag::Int : TypeTag::Double;
      Token name = expect(TokKind::Identifier);
      if (check(TokKind::LParen)) {
        if (!top_level) fail({"'='"});  // no nested functions
        return parse_func_rest(tag, name, loc);
      }
      if (check(TokKind::Assign)) {
        advance();
        ExprPtr init = parse_expr();
        return std::make_unique<Stmt>(
            Stmt{VarDecl{tag, name.lexeme, std::move(init)}, loc});
      }
      fail({"'('", "'='"});
    }
    if (check(TokKind::KwReturn)) {
      advance();
      ExprPtr e = parse_expr();
      return std::make_unique<Stmt>(Stmt{Return{std::move(e)}, loc});
    }
    ExprPtr e = parse_expr();
    return std::make_unique<Stmt>(Stmt{ExprStmt{std::move(e)}, loc});
  }

  StmtPtr parse_func_rest(TypeTag ret, const Token& name, SrcLoc loc) {
    expect(TokKind::LParen);
    std::vector<Param> params;
    if (!check(TokKind::RParen)) {
      for (;;) {
        if (!check(TokKind::KwInt) && !check(TokKind::KwDouble))
          fail({"'int'", "'double'", "')'"});
        TypeTag tag =
            advance().kind == TokKind::KwInt ? TypeTag::Int : TypeTag::Double;
        Token pname = expect(TokKind::Identifier);
        params.push_back({tag, pname.lexeme});
        if (check(TokKind::Comma)) {
          advance();
          continue;
        }
        break;
      }
    }
    expect(TokKind::RParen);
    expect(TokKind::LBrace);
    std::vector<StmtPtr> body;
    while (!check(TokKind::RBrace)) {
      if (at_end()) fail({"'}'"});
      body.push_back(parse_stmt(/*top_level=*/false));
    }
    expect(TokKind::RBrace);
    return std::make_unique<Stmt>(
        Stmt{FuncDecl{ret, name.lexeme, std::move(params), std::move(body)},
             loc});
  }

  ExprPtr parse_expr() { return parse_assign(); }

  ExprPtr parse_assign() {
    // IDENT '=' expr, with one-token lookahead to tell it from additive.
    if (check(TokKind::Identifier)) {
      const Token* next = peek(1);
      if (next && next->kind == TokKind::Assign) {
        Token target = advance();
        advance();  // '='
        ExprPtr value = parse_assign();
        return make_assign(target.lexeme, std::move(value),
                           {target.line, target.column});
      }
    }
    return parse_additive();
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (check(TokKind::Plus) || check(TokKind::Minus)) {
      Token op = advance();
      ExprPtr rhs = parse_multiplicative();
      lhs = make_binop(op.kind == TokKind::Plus ? BinOp::Add : BinOp::Sub,
                       std::move(lhs), std::move(rhs), {op.line, op.column});
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (check(TokKind::Star) || check(TokKind::Slash) ||
           check(TokKind::Percent)) {
      Token op = advance();
      BinOp b = op.kind == TokKind::Star    ? BinOp::Mul
                : op.kind == TokKind::Slash ? BinOp::Div
                                            : BinOp::Mod;
      ExprPtr rhs = parse_unary();
      lhs = make_binop(b, std::move(lhs), std::move(rhs),
                       {op.line, op.column});
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (check(TokKind::Minus)) {
      Token op = advance();
      return make_neg(parse_unary(), {op.line, op.column});
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    if (at_end())
      fail({"int literal", "double literal", "identifier", "'('", "'-'"});
    const Token& t = *peek();
    SrcLoc loc{t.line, t.column};
    switch (t.kind) {
      case TokKind::IntLiteral: {
        advance();
        int64_t v = 0;
        std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
        return make_int(v, loc);
      }
      case TokKind::DoubleLiteral: {
        advance();
        return make_double(std::strtod(t.lexeme.c_str(), nullptr), loc);
      }
      case TokKind::Identifier: {
        advance();
        if (check(TokKind::LParen)) {
          advance();
          std::vector<ExprPtr> args;
          if (!check(TokKind::RParen)) {
            for (;;) {
              args.push_back(parse_expr());
              if (check(TokKind::Comma)) {
                advance();
                continue;
              }
              break;
            }
          }
          expect(TokKind::RParen);
          return make_call(t.lexeme, std::move(args), loc);
        }
        return make_ident(t.lexeme, loc);
      }
      case TokKind::LParen: {
        advance();
        ExprPtr inner = parse_expr();
        expect(TokKind::RParen);
        return inner;
      }
      default:
        fail({"int literal", "double literal", "identifier", "'('", "'-'"});
    }
  }

  const std::vector<Token>& toks_;
  size_t pos_ = 0;
};

}  // namespace

ast::Program parse(const std::vector<Token>& tokens) {
  hooks::counters().parse_invocations.fetch_add(1, std::memory_order_relaxed);
  Parser p(tokens);
  return p.parse_program();
}

ast::Program parse_source(std::string_view source) {
  return parse(tokenize(source));
}

}  // namespace gpjit::frontend
