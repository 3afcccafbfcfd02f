#include <optional>
#include <unordered_set>

#include "gpjit/ast.hpp"

namespace gpjit::ast {

namespace {

bool promotes_to(TypeTag from, TypeTag to) {
  return from == to || (from == TypeTag::Int && to == TypeTag::Double);
}

struct Scope {
  std::unordered_map<std::string, TypeTag> vars;
};

class Checker {
 public:
  Checker(TypedProgram& out) : out_(out) {}

  void run() {
    collect_signatures();
    // Top-level statements form the implicit entry; its locals are invisible
    // to function bodies.
    Scope entry_scope;
    std::vector<TypeTag> entry_returns;
    for (const auto& s : out_.program.top_level) {
      if (std::holds_alternative<FuncDecl>(s->node)) {
        check_function(std::get<FuncDecl>(s->node), s->loc);
      } else {
        check_stmt(*s, entry_scope, std::nullopt, &entry_returns);
      }
    }
    TypeTag entry = TypeTag::Int;
    for (TypeTag t : entry_returns)
      if (t == TypeTag::Double) entry = TypeTag::Double;
    out_.entry_tag = entry;
    if (!diags_.empty()) {
      std::string msg = std::to_string(diags_.size()) + " type error(s): " +
                        diags_.front().message;
      throw TypeError(std::move(msg), std::move(diags_));
    }
  }

 private:
  void diag(TypeDiagKind kind, std::string name, std::string message,
            SrcLoc loc) {
    diags_.push_back({kind, std::move(name), std::move(message), loc});
  }

  void collect_signatures() {
    for (const auto& s : out_.program.top_level) {
      const auto* f = std::get_if<FuncDecl>(&s->node);
      if (!f) continue;
      if (out_.functions.count(f->name)) {
        diag(TypeDiagKind::DuplicateDefinition, f->name,
             "function '" + f->name + "' defined more than once", s->loc);
        continue;
      }
      if (out_.externs.count(f->name)) {
        diag(TypeDiagKind::DuplicateDefinition, f->name,
             "function '" + f->name + "' collides with a registered native",
             s->loc);
        continue;
      }
      out_.functions.emplace(f->name, f);
    }
  }

  void check_function(const FuncDecl& f, SrcLoc loc) {
    Scope scope;
    for (const auto& p : f.params) {
      if (scope.vars.count(p.name)) {
        diag(TypeDiagKind::DuplicateDefinition, p.name,
             "duplicate parameter '" + p.name + "' in function '" + f.name +
                 "'",
             loc);
        continue;
      }
      scope.vars.emplace(p.name, p.tag);
    }
    for (const auto& s : f.body) {
      if (std::holds_alternative<FuncDecl>(s->node)) {
        // The parser rejects nested functions; guard anyway for built trees.
        diag(TypeDiagKind::DuplicateDefinition,
             std::get<FuncDecl>(s->node).name, "nested function declaration",
             s->loc);
        continue;
      }
      check_stmt(*s, scope, f.return_tag, nullptr);
    }
  }

  void check_stmt(const Stmt& s, Scope& scope, std::optional<TypeTag> fn_ret,
                  std::vector<TypeTag>* entry_returns) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ExprStmt>) {
            check_expr(*n.expr, scope);
          } else if constexpr (std::is_same_v<T, VarDecl>) {
            TypeTag init = check_expr(*n.init, scope);
            if (!promotes_to(init, n.tag)) {
              diag(TypeDiagKind::TypeMismatch, n.name,
                   "cannot narrow double initializer to int variable '" +
                       n.name + "'",
                   s.loc);
            }
            if (scope.vars.count(n.name)) {
              diag(TypeDiagKind::DuplicateDefinition, n.name,
                   "variable '" + n.name + "' already declared in this scope",
                   s.loc);
            } else {
              scope.vars.emplace(n.name, n.tag);
            }
          } else if constexpr (std::is_same_v<T, Return>) {
            TypeTag t = check_expr(*n.expr, scope);
            if (fn_ret) {
              if (!promotes_to(t, *fn_ret)) {
                diag(TypeDiagKind::TypeMismatch, "",
                     "cannot narrow double return value to int", s.loc);
              }
            } else if (entry_returns) {
              entry_returns->push_back(t);
            }
          }
        },
        s.node);
  }

  TypeTag check_expr(const Expr& e, Scope& scope) {
    TypeTag tag = std::visit(
        [&](const auto& n) -> TypeTag {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, IntLiteral>) {
            return TypeTag::Int;
          } else if constexpr (std::is_same_v<T, DoubleLiteral>) {
            return TypeTag::Double;
          } else if constexpr (std::is_same_v<T, Identifier>) {
            auto it = scope.vars.find(n.name);
            if (it == scope.vars.end()) {
              diag(TypeDiagKind::UnknownIdentifier, n.name,
                   "unknown identifier '" + n.name + "'", e.loc);
              return TypeTag::Int;  // recovery tag
            }
            return it->second;
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            TypeTag l = check_expr(*n.lhs, scope);
            TypeTag r = check_expr(*n.rhs, scope);
            if (n.op == BinOp::Mod &&
                (l == TypeTag::Double || r == TypeTag::Double)) {
              diag(TypeDiagKind::TypeMismatch, "",
                   "'%' requires int operands", e.loc);
              return TypeTag::Int;
            }
            return (l == TypeTag::Double || r == TypeTag::Double)
                       ? TypeTag::Double
                       : TypeTag::Int;
          } else if constexpr (std::is_same_v<T, UnaryNeg>) {
            return check_expr(*n.operand, scope);
          } else if constexpr (std::is_same_v<T, Call>) {
            for (const auto& a : n.args) check_expr(*a, scope);
            const FnSig* sig = nullptr;
            FnSig local;
            if (auto it = out_.functions.find(n.callee);
                it != out_.functions.end()) {
              local.ret = it->second->return_tag;
              for (const auto& p : it->second->params)
                local.params.push_back(p.tag);
              sig = &local;
            } else if (auto ext = out_.externs.find(n.callee);
                       ext != out_.externs.end()) {
              sig = &ext->second;
            }
            if (!sig) {
              diag(TypeDiagKind::UnknownFunction, n.callee,
                   "call to unknown function '" + n.callee + "'", e.loc);
              return TypeTag::Int;
            }
            if (n.args.size() != sig->params.size()) {
              diag(TypeDiagKind::ArityMismatch, n.callee,
                   "function '" + n.callee + "' expects " +
                       std::to_string(sig->params.size()) + " argument(s), got " +
                       std::to_string(n.args.size()),
                   e.loc);
              return sig->ret;
            }
            for (size_t i = 0; i < n.args.size(); ++i) {
              TypeTag at = out_.tags.at(n.args[i].get());
              if (!promotes_to(at, sig->params[i])) {
                diag(TypeDiagKind::TypeMismatch, n.callee,
                     "argument " + std::to_string(i + 1) + " of '" + n.callee +
                         "' cannot narrow double to int",
                     n.args[i]->loc);
              }
            }
            return sig->ret;
          } else {
            static_assert(std::is_same_v<T, Assignment>);
            TypeTag vt = check_expr(*n.value, scope);
            auto it = scope.vars.find(n.target);
            if (it == scope.vars.end()) {
              diag(TypeDiagKind::UnknownIdentifier, n.target,
                   "assignment to unknown identifier '" + n.target + "'",
                   e.loc);
              return vt;
            }
            if (!promotes_to(vt, it->second)) {
              diag(TypeDiagKind::TypeMismatch, n.target,
                   "cannot narrow double value into int variable '" +
                       n.target + "'",
                   e.loc);
            }
            return it->second;
          }
        },
        e.node);
    out_.tags.emplace(&e, tag);
    return tag;
  }

  TypedProgram& out_;
  std::vector<TypeDiag> diags_;
};

}  // namespace

TypedProgram type_check(const Program& p, const ExternSigs& externs) {
  TypedProgram out;
  out.program = clone(p);
  out.externs = externs;
  Checker checker(out);
  checker.run();
  return out;
}

}  // namespace gpjit::ast
