#include "gpjit/direct.hpp"

namespace gpjit::direct_exec {

using ast::TypeTag;

DirectExecutor::DirectExecutor(const ast::TypedProgram& program,
                               const NativeRegistry& registry)
    : program_(program), registry_(registry) {
  if (auto it = program_.functions.find("gp_main");
      it != program_.functions.end())
    gp_main_ = it->second;
}

std::unique_ptr<DirectExecutor> prepare_direct(
    const ast::TypedProgram& program, const NativeRegistry& registry) {
  return std::make_unique<DirectExecutor>(program, registry);
}

namespace {

Value binop_values(ast::BinOp op, const Value& l, const Value& r) {
  using ast::BinOp;
  if (l.is_int() && r.is_int()) {
    int64_t a = l.as_int(), b = r.as_int();
    switch (op) {
      case BinOp::Add: return Value::of_int(arith::wrap_add(a, b));
      case BinOp::Sub: return Value::of_int(arith::wrap_sub(a, b));
      case BinOp::Mul: return Value::of_int(arith::wrap_mul(a, b));
      case BinOp::Div: return Value::of_int(arith::prot_div(a, b));
      case BinOp::Mod: return Value::of_int(arith::prot_rem(a, b));
    }
  }
  double a = l.to_double(), b = r.to_double();
  switch (op) {
    case BinOp::Add: return Value::of_double(a + b);
    case BinOp::Sub: return Value::of_double(a - b);
    case BinOp::Mul: return Value::of_double(a * b);
    case BinOp::Div: return Value::of_double(a / b);
    case BinOp::Mod: throw Error("'%' on double operands at runtime");
  }
  return Value();
}

Value promote_to(Value v, TypeTag tag) {
  if (tag == TypeTag::Double && v.is_int())
    return Value::of_double(double(v.as_int()));
  return v;
}

}  // namespace

Value DirectExecutor::eval_expr(const ast::Expr& e, ContextBlock& ctx) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::IntLiteral>) {
          return Value::of_int(n.value);
        } else if constexpr (std::is_same_v<T, ast::DoubleLiteral>) {
          return Value::of_double(n.value);
        } else if constexpr (std::is_same_v<T, ast::Identifier>) {
          Value* v = ctx.lookup(n.name);
          if (!v) throw Error("unbound identifier '" + n.name + "'", e.loc);
          return *v;
        } else if constexpr (std::is_same_v<T, ast::BinaryOp>) {
          Value l = eval_expr(*n.lhs, ctx);
          Value r = eval_expr(*n.rhs, ctx);
          return binop_values(n.op, l, r);
        } else if constexpr (std::is_same_v<T, ast::UnaryNeg>) {
          Value v = eval_expr(*n.operand, ctx);
          return v.is_int() ? Value::of_int(arith::wrap_neg(v.as_int()))
                            : Value::of_double(-v.as_double());
        } else if constexpr (std::is_same_v<T, ast::Call>) {
          if (auto it = program_.functions.find(n.callee);
              it != program_.functions.end()) {
            const ast::FuncDecl& f = *it->second;
            std::vector<Value> args;
            args.reserve(n.args.size());
            for (size_t i = 0; i < n.args.size(); ++i)
              args.push_back(promote_to(eval_expr(*n.args[i], ctx),
                                        f.params[i].tag));
            return call_decl(f, args);
          }
          const NativeCallable* nc = registry_.find(n.callee);
          if (!nc)
            throw Error("call to unknown function '" + n.callee + "'", e.loc);
          std::vector<Value> args;
          args.reserve(n.args.size());
          for (size_t i = 0; i < n.args.size(); ++i)
            args.push_back(
                promote_to(eval_expr(*n.args[i], ctx), nc->sig.params[i]));
          Value out = nc->fn(args);
          if (out.tag() != nc->sig.ret)
            throw Error("native '" + nc->name +
                        "' returned a value of the wrong type");
          return out;
        } else {
          static_assert(std::is_same_v<T, ast::Assignment>);
          Value v = eval_expr(*n.value, ctx);
          Value* slot = ctx.lookup(n.target);
          if (!slot)
            throw Error("assignment to unbound '" + n.target + "'", e.loc);
          v = promote_to(v, slot->tag());
          *slot = v;
          return v;
        }
      },
      e.node);
}

std::optional<Value> DirectExecutor::exec_stmt(const ast::Stmt& s,
                                               ContextBlock& ctx) {
  return std::visit(
      [&](const auto& n) -> std::optional<Value> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ast::ExprStmt>) {
          eval_expr(*n.expr, ctx);
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ast::VarDecl>) {
          Value v = promote_to(eval_expr(*n.init, ctx),
                               n.tag);
          ctx.slots.insert_or_assign(n.name, v);
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ast::Return>) {
          return eval_expr(*n.expr, ctx);
        } else {
          return std::nullopt;  // FuncDecl: nothing to execute in place
        }
      },
      s.node);
}

Value DirectExecutor::call_decl(const ast::FuncDecl& f,
                                std::span<const Value> args) {
  if (++depth_ > kCallDepthLimit) {
    --depth_;
    throw RecursionLimitError();
  }
  ContextBlock frame;  // no parent chain into the caller
  for (size_t i = 0; i < f.params.size(); ++i)
    frame.slots.emplace(f.params[i].name, args[i]);
  std::optional<Value> out;
  for (const auto& s : f.body) {
    out = exec_stmt(*s, frame);
    if (out) break;
  }
  --depth_;
  Value v = out.value_or(f.return_tag == TypeTag::Int
                             ? Value::of_int(0)
                             : Value::of_double(0.0));
  return promote_to(v, f.return_tag);
}

Value DirectExecutor::run(std::span<const Value> inputs) {
  depth_ = 0;
  if (gp_main_) {
    if (inputs.size() != gp_main_->params.size())
      throw InputArityError("gp_main expects " +
                            std::to_string(gp_main_->params.size()) +
                            " input(s), got " + std::to_string(inputs.size()));
    for (size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].tag() != gp_main_->params[i].tag)
        throw InputArityError("input " + std::to_string(i + 1) +
                              " of gp_main has the wrong type");
    return call_decl(*gp_main_, inputs);
  }
  if (!inputs.empty())
    throw InputArityError(
        "program has no gp_main; the implicit entry takes no inputs");

  ++depth_;
  ContextBlock entry;
  std::optional<Value> out;
  for (const auto& s : program_.program.top_level) {
    out = exec_stmt(*s, entry);
    if (out) break;
  }
  --depth_;
  Value v = out.value_or(Value::of_int(0));
  return promote_to(v, program_.entry_tag);
}

}  // namespace gpjit::direct_exec
