#include "gpjit/pretty.hpp"

#include <cmath>
#include <sstream>

namespace gpjit::frontend {

using namespace ast;

namespace {

// Precedence: assign 0 < additive 1 < multiplicative 2 < unary 3 < primary 4.
int precedence_of(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Assignment>) {
          return 0;
        } else if constexpr (std::is_same_v<T, BinaryOp>) {
          return (n.op == BinOp::Add || n.op == BinOp::Sub) ? 1 : 2;
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          return 3;
        } else if constexpr (std::is_same_v<T, IntLiteral>) {
          return n.value < 0 ? 3 : 4;
        } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
          return std::signbit(n.value) ? 3 : 4;
        } else {
          return 4;
        }
      },
      e.node);
}

void write_expr(std::ostringstream& os, const Expr& e, int min_prec) {
  bool parens = precedence_of(e) < min_prec;
  if (parens) os << '(';
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntLiteral>) {
          os << n.value;
        } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
          if (!std::isfinite(n.value))
            throw Error("cannot print non-finite double literal");
          os << double_literal_text(n.value);
        } else if constexpr (std::is_same_v<T, Identifier>) {
          os << n.name;
        } else if constexpr (std::is_same_v<T, BinaryOp>) {
          int prec = (n.op == BinOp::Add || n.op == BinOp::Sub) ? 1 : 2;
          write_expr(os, *n.lhs, prec);
          os << ' ' << op_symbol(n.op) << ' ';
          write_expr(os, *n.rhs, prec + 1);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          os << '-';
          write_expr(os, *n.operand, 3);
        } else if constexpr (std::is_same_v<T, Call>) {
          os << n.callee << '(';
          for (size_t i = 0; i < n.args.size(); ++i) {
            if (i) os << ", ";
            write_expr(os, *n.args[i], 0);
          }
          os << ')';
        } else {
          static_assert(std::is_same_v<T, Assignment>);
          os << n.target << " = ";
          write_expr(os, *n.value, 0);
        }
      },
      e.node);
  if (parens) os << ')';
}

void write_stmt(std::ostringstream& os, const Stmt& s, int indent) {
  std::string pad(indent, ' ');
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprStmt>) {
          os << pad;
          write_expr(os, *n.expr, 0);
          os << '\n';
        } else if constexpr (std::is_same_v<T, VarDecl>) {
          os << pad << type_name(n.tag) << ' ' << n.name << " = ";
          write_expr(os, *n.init, 0);
          os << '\n';
        } else if constexpr (std::is_same_v<T, FuncDecl>) {
          os << pad << type_name(n.return_tag) << ' ' << n.name << '(';
          for (size_t i = 0; i < n.params.size(); ++i) {
            if (i) os << ", ";
            os << type_name(n.params[i].tag) << ' ' << n.params[i].name;
          }
          os << ") {\n";
          for (const auto& st : n.body) write_stmt(os, *st, indent + 4);
          os << pad << "}\n";
        } else {
          static_assert(std::is_same_v<T, Return>);
          os << pad << "return ";
          write_expr(os, *n.expr, 0);
          os << '\n';
        }
      },
      s.node);
}

}  // namespace

std::string pretty_print(const ast::Program& p) {
  std::ostringstream os;
  for (const auto& s : p.top_level) write_stmt(os, *s, 0);
  return os.str();
}

std::string pretty_print(const ast::Expr& e) {
  std::ostringstream os;
  write_expr(os, e, 0);
  return os.str();
}

}  // namespace gpjit::frontend
