#include "gpjit/ast.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace gpjit::ast {

const char* type_name(TypeTag tag) {
  return tag == TypeTag::Int ? "int" : "double";
}

const char* op_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
  }
  return "?";
}

ExprPtr make_int(int64_t value, SrcLoc loc) {
  return std::make_unique<Expr>(Expr{IntLiteral{value}, loc});
}
ExprPtr make_double(double value, SrcLoc loc) {
  return std::make_unique<Expr>(Expr{DoubleLiteral{value}, loc});
}
ExprPtr make_ident(std::string name, SrcLoc loc) {
  return std::make_unique<Expr>(Expr{Identifier{std::move(name)}, loc});
}
ExprPtr make_binop(BinOp op, ExprPtr lhs, ExprPtr rhs, SrcLoc loc) {
  return std::make_unique<Expr>(
      Expr{BinaryOp{op, std::move(lhs), std::move(rhs)}, loc});
}
ExprPtr make_neg(ExprPtr operand, SrcLoc loc) {
  return std::make_unique<Expr>(Expr{UnaryNeg{std::move(operand)}, loc});
}
ExprPtr make_call(std::string callee, std::vector<ExprPtr> args, SrcLoc loc) {
  return std::make_unique<Expr>(
      Expr{Call{std::move(callee), std::move(args)}, loc});
}
ExprPtr make_assign(std::string target, ExprPtr value, SrcLoc loc) {
  return std::make_unique<Expr>(
      Expr{Assignment{std::move(target), std::move(value)}, loc});
}

namespace {

Metrics combine_child(Metrics parent, Metrics child) {
  parent.size += child.size;
  parent.depth = std::max(parent.depth, child.depth + 1);
  return parent;
}

}  // namespace

Metrics metrics(const Expr& e) {
  Metrics m{1, 1};
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinaryOp>) {
          m = combine_child(m, metrics(*n.lhs));
          m = combine_child(m, metrics(*n.rhs));
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          m = combine_child(m, metrics(*n.operand));
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& a : n.args) m = combine_child(m, metrics(*a));
        } else if constexpr (std::is_same_v<T, Assignment>) {
          m = combine_child(m, metrics(*n.value));
        }
      },
      e.node);
  return m;
}

Metrics metrics(const Stmt& s) {
  Metrics m{1, 1};
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprStmt>) {
          m = combine_child(m, metrics(*n.expr));
        } else if constexpr (std::is_same_v<T, VarDecl>) {
          m = combine_child(m, metrics(*n.init));
        } else if constexpr (std::is_same_v<T, FuncDecl>) {
          for (const auto& st : n.body) m = combine_child(m, metrics(*st));
        } else if constexpr (std::is_same_v<T, Return>) {
          m = combine_child(m, metrics(*n.expr));
        }
      },
      s.node);
  return m;
}

Metrics metrics(const Program& p) {
  Metrics m{0, 0};
  for (const auto& s : p.top_level) {
    Metrics c = metrics(*s);
    m.size += c.size;
    m.depth = std::max(m.depth, c.depth);
  }
  return m;
}

ExprPtr clone(const Expr& e) {
  ExprPtr out = std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntLiteral>) {
          return make_int(n.value, e.loc);
        } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
          return make_double(n.value, e.loc);
        } else if constexpr (std::is_same_v<T, Identifier>) {
          return make_ident(n.name, e.loc);
        } else if constexpr (std::is_same_v<T, BinaryOp>) {
          return make_binop(n.op, clone(*n.lhs), clone(*n.rhs), e.loc);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          return make_neg(clone(*n.operand), e.loc);
        } else if constexpr (std::is_same_v<T, Call>) {
          std::vector<ExprPtr> args;
          args.reserve(n.args.size());
          for (const auto& a : n.args) args.push_back(clone(*a));
          return make_call(n.callee, std::move(args), e.loc);
        } else {
          static_assert(std::is_same_v<T, Assignment>);
          return make_assign(n.target, clone(*n.value), e.loc);
        }
      },
      e.node);
  return out;
}

StmtPtr clone(const Stmt& s) {
  StmtPtr out = std::visit(
      [&](const auto& n) -> StmtPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExprStmt>) {
          return std::make_unique<Stmt>(Stmt{ExprStmt{clone(*n.expr)}, s.loc});
        } else if constexpr (std::is_same_v<T, VarDecl>) {
          return std::make_unique<Stmt>(
              Stmt{VarDecl{n.tag, n.name, clone(*n.init)}, s.loc});
        } else if constexpr (std::is_same_v<T, FuncDecl>) {
          FuncDecl f{n.return_tag, n.name, n.params, {}};
          f.body.reserve(n.body.size());
          for (const auto& st : n.body) f.body.push_back(clone(*st));
          return std::make_unique<Stmt>(Stmt{std::move(f), s.loc});
        } else {
          static_assert(std::is_same_v<T, Return>);
          return std::make_unique<Stmt>(Stmt{Return{clone(*n.expr)}, s.loc});
        }
      },
      s.node);
  return out;
}

Program clone(const Program& p) {
  Program out;
  out.top_level.reserve(p.top_level.size());
  for (const auto& s : p.top_level) out.top_level.push_back(clone(*s));
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, IntLiteral>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
          // bit equality so -0.0 and NaN payloads round-trip honestly
          return std::bit_cast<uint64_t>(na.value) ==
                 std::bit_cast<uint64_t>(nb.value);
        } else if constexpr (std::is_same_v<T, Identifier>) {
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, BinaryOp>) {
          return na.op == nb.op && structurally_equal(*na.lhs, *nb.lhs) &&
                 structurally_equal(*na.rhs, *nb.rhs);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          return structurally_equal(*na.operand, *nb.operand);
        } else if constexpr (std::is_same_v<T, Call>) {
          if (na.callee != nb.callee || na.args.size() != nb.args.size())
            return false;
          for (size_t i = 0; i < na.args.size(); ++i)
            if (!structurally_equal(*na.args[i], *nb.args[i])) return false;
          return true;
        } else {
          static_assert(std::is_same_v<T, Assignment>);
          return na.target == nb.target &&
                 structurally_equal(*na.value, *nb.value);
        }
      },
      a.node);
}

bool structurally_equal(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, ExprStmt>) {
          return structurally_equal(*na.expr, *nb.expr);
        } else if constexpr (std::is_same_v<T, VarDecl>) {
          return na.tag == nb.tag && na.name == nb.name &&
                 structurally_equal(*na.init, *nb.init);
        } else if constexpr (std::is_same_v<T, FuncDecl>) {
          if (na.return_tag != nb.return_tag || na.name != nb.name ||
              na.params.size() != nb.params.size() ||
              na.body.size() != nb.body.size())
            return false;
          for (size_t i = 0; i < na.params.size(); ++i)
            if (na.params[i].tag != nb.params[i].tag ||
                na.params[i].name != nb.params[i].name)
              return false;
          for (size_t i = 0; i < na.body.size(); ++i)
            if (!structurally_equal(*na.body[i], *nb.body[i])) return false;
          return true;
        } else {
          static_assert(std::is_same_v<T, Return>);
          return structurally_equal(*na.expr, *nb.expr);
        }
      },
      a.node);
}

bool structurally_equal(const Program& a, const Program& b) {
  if (a.top_level.size() != b.top_level.size()) return false;
  for (size_t i = 0; i < a.top_level.size(); ++i)
    if (!structurally_equal(*a.top_level[i], *b.top_level[i])) return false;
  return true;
}

namespace {

// Pre-order walk; returns the node at index k (counting down in `k`).
const Expr* find_preorder(const Expr& e, int& k) {
  if (k == 0) return &e;
  --k;
  const Expr* found = nullptr;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinaryOp>) {
          found = find_preorder(*n.lhs, k);
          if (!found) found = find_preorder(*n.rhs, k);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          found = find_preorder(*n.operand, k);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& a : n.args) {
            found = find_preorder(*a, k);
            if (found) break;
          }
        } else if constexpr (std::is_same_v<T, Assignment>) {
          found = find_preorder(*n.value, k);
        }
      },
      e.node);
  return found;
}

ExprPtr rebuild_with(const Expr& e, int& k, const Expr& replacement) {
  if (k == 0) {
    --k;
    return clone(replacement);
  }
  --k;
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinaryOp>) {
          ExprPtr lhs = k >= 0 ? rebuild_with(*n.lhs, k, replacement)
                               : clone(*n.lhs);
          ExprPtr rhs = k >= 0 ? rebuild_with(*n.rhs, k, replacement)
                               : clone(*n.rhs);
          return make_binop(n.op, std::move(lhs), std::move(rhs), e.loc);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          ExprPtr op = k >= 0 ? rebuild_with(*n.operand, k, replacement)
                              : clone(*n.operand);
          return make_neg(std::move(op), e.loc);
        } else if constexpr (std::is_same_v<T, Call>) {
          std::vector<ExprPtr> args;
          args.reserve(n.args.size());
          for (const auto& a : n.args) {
            args.push_back(k >= 0 ? rebuild_with(*a, k, replacement)
                                  : clone(*a));
          }
          return make_call(n.callee, std::move(args), e.loc);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          ExprPtr v = k >= 0 ? rebuild_with(*n.value, k, replacement)
                             : clone(*n.value);
          return make_assign(n.target, std::move(v), e.loc);
        } else {
          return clone(e);  // leaf, k already consumed elsewhere
        }
      },
      e.node);
}

int depth_at(const Expr& e, int& k, int depth) {
  if (k == 0) return depth;
  --k;
  int found = 0;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinaryOp>) {
          found = depth_at(*n.lhs, k, depth + 1);
          if (!found) found = depth_at(*n.rhs, k, depth + 1);
        } else if constexpr (std::is_same_v<T, UnaryNeg>) {
          found = depth_at(*n.operand, k, depth + 1);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& a : n.args) {
            found = depth_at(*a, k, depth + 1);
            if (found) break;
          }
        } else if constexpr (std::is_same_v<T, Assignment>) {
          found = depth_at(*n.value, k, depth + 1);
        }
      },
      e.node);
  return found;
}

}  // namespace

const Expr& select_subtree(const Expr& root, int k) {
  if (k < 0) throw std::out_of_range("select_subtree: negative index");
  int rem = k;
  const Expr* found = find_preorder(root, rem);
  if (!found)
    throw std::out_of_range("select_subtree: index " + std::to_string(k) +
                            " out of range");
  return *found;
}

ExprPtr replace_subtree(const Expr& root, int k, const Expr& replacement) {
  if (k < 0) throw std::out_of_range("replace_subtree: negative index");
  if (k >= metrics(root).size)
    throw std::out_of_range("replace_subtree: index " + std::to_string(k) +
                            " out of range");
  int rem = k;
  return rebuild_with(root, rem, replacement);
}

int subtree_depth_at(const Expr& root, int k) {
  if (k < 0) throw std::out_of_range("subtree_depth_at: negative index");
  int rem = k;
  int d = depth_at(root, rem, 1);
  if (d == 0)
    throw std::out_of_range("subtree_depth_at: index " + std::to_string(k) +
                            " out of range");
  return d;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

class DotWriter {
 public:
  explicit DotWriter(std::ostringstream& os) : os_(os) {}

  int visit(const Expr& e) {
    int id = next_++;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, IntLiteral>) {
            node(id, "IntLiteral " + std::to_string(n.value));
          } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
            node(id, "DoubleLiteral " + double_literal_text(n.value));
          } else if constexpr (std::is_same_v<T, Identifier>) {
            node(id, "Identifier " + n.name);
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            node(id, std::string("BinaryOp ") + op_symbol(n.op));
            edge(id, visit(*n.lhs));
            edge(id, visit(*n.rhs));
          } else if constexpr (std::is_same_v<T, UnaryNeg>) {
            node(id, "UnaryNeg");
            edge(id, visit(*n.operand));
          } else if constexpr (std::is_same_v<T, Call>) {
            node(id, "Call " + n.callee);
            for (const auto& a : n.args) edge(id, visit(*a));
          } else if constexpr (std::is_same_v<T, Assignment>) {
            node(id, "Assignment " + n.target);
            edge(id, visit(*n.value));
          }
        },
        e.node);
    return id;
  }

  int visit(const Stmt& s) {
    int id = next_++;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ExprStmt>) {
            node(id, "ExprStmt");
            edge(id, visit(*n.expr));
          } else if constexpr (std::is_same_v<T, VarDecl>) {
            node(id, std::string("VarDecl ") + type_name(n.tag) + " " + n.name);
            edge(id, visit(*n.init));
          } else if constexpr (std::is_same_v<T, FuncDecl>) {
            node(id, std::string("FuncDecl ") + type_name(n.return_tag) + " " +
                         n.name);
            for (const auto& st : n.body) edge(id, visit(*st));
          } else if constexpr (std::is_same_v<T, Return>) {
            node(id, "Return");
            edge(id, visit(*n.expr));
          }
        },
        s.node);
    return id;
  }

 private:
  void node(int id, const std::string& label) {
    os_ << "  n" << id << " [label=\"" << dot_escape(label) << "\"];\n";
  }
  void edge(int from, int to) {
    os_ << "  n" << from << " -> n" << to << ";\n";
  }

  std::ostringstream& os_;
  int next_ = 0;
};

}  // namespace

std::string double_literal_text(double v) {
  char buf[360];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                 std::chars_format::fixed);
  std::string s(buf, end);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

std::string to_dot(const Program& p) {
  std::ostringstream os;
  os << "digraph ast {\n";
  DotWriter w(os);
  for (const auto& s : p.top_level) w.visit(*s);
  os << "}\n";
  return os.str();
}

}  // namespace gpjit::ast
