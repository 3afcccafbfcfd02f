#include "gpjit/codegen.hpp"

#include <unordered_map>

namespace gpjit::ir {

using ast::TypeTag;

namespace {

Type lower_type(TypeTag t) {
  return t == TypeTag::Int ? Type::I64 : Type::F64;
}

// Per-module lowering state: symbol tables plus the insertion cursor.
class Codegen {
 public:
  Codegen(const ast::TypedProgram& tp, const NativeRegistry& registry)
      : tp_(tp), registry_(registry), module_(std::make_unique<Module>()) {}

  ModulePtr run() {
    depth_global_ = module_->add_global({kDepthGlobal, Type::I64});
    trap_ext_ = module_->add_extern({kTrapSymbol, {}, Type::Void});

    // declare functions first so calls resolve in any order
    std::vector<const ast::FuncDecl*> decls;
    for (const auto& s : tp_.program.top_level) {
      if (const auto* f = std::get_if<ast::FuncDecl>(&s->node)) {
        std::vector<Type> params;
        for (const auto& p : f->params) params.push_back(lower_type(p.tag));
        Function* fn = module_->add_function(f->name, std::move(params),
                                             lower_type(f->return_tag));
        fn_index_[f->name] = int(module_->functions.size()) - 1;
        (void)fn;
        decls.push_back(f);
      }
    }

    for (const auto* f : decls) emit_function(*f);
    emit_entry();

    verify_or_throw(*module_, "codegen");
    return std::move(module_);
  }

 private:
  struct FnCtx {
    Function* fn = nullptr;
    std::unordered_map<std::string, Instr*> slots;  // name -> alloca
    std::unordered_map<std::string, Type> slot_types;
    int dead_blocks = 0;
    bool terminated = false;  // current block already ended with ret
  };

  // entry block: depth bump + limit check, then branch to the body.
  Block* emit_prologue(Function* fn, Builder& b) {
    Block* entry = fn->add_block("entry");
    Block* trap = fn->add_block("trap");
    Block* body = fn->add_block("body");
    b.set_insert_point(entry);
    Instr* d = b.load(Operand::global(depth_global_), Type::I64);
    Instr* d1 = b.binop(Op::IAdd, Operand::of(d), Operand::const_i64(1));
    b.store(Operand::of(d1), Operand::global(depth_global_));
    Instr* over = b.icmp(Op::ICmpSgt, Operand::of(d1),
                         Operand::const_i64(kCallDepthLimit));
    b.cond_br(Operand::of(over), trap, body);
    b.set_insert_point(trap);
    b.call_ext(trap_ext_, Type::Void, {});
    b.ret(fn->ret == Type::I64 ? Operand::const_i64(0)
                               : Operand::const_f64(0.0));
    b.set_insert_point(body);
    return body;
  }

  void emit_depth_exit(Builder& b) {
    Instr* d = b.load(Operand::global(depth_global_), Type::I64);
    Instr* d1 = b.binop(Op::ISub, Operand::of(d), Operand::const_i64(1));
    b.store(Operand::of(d1), Operand::global(depth_global_));
  }

  void emit_function(const ast::FuncDecl& f) {
    FnCtx ctx;
    ctx.fn = module_->functions[fn_index_.at(f.name)].get();
    Builder b(ctx.fn, nullptr);
    emit_prologue(ctx.fn, b);
    for (size_t i = 0; i < f.params.size(); ++i) {
      Type t = lower_type(f.params[i].tag);
      Instr* slot = b.alloca_slot(t);
      b.store(Operand::param(uint32_t(i)), Operand::of(slot));
      ctx.slots[f.params[i].name] = slot;
      ctx.slot_types[f.params[i].name] = t;
    }
    for (const auto& s : f.body) emit_stmt(*s, ctx, b);
    if (!ctx.terminated) {
      // fall-off-the-end returns the zero of the declared type
      emit_depth_exit(b);
      b.ret(ctx.fn->ret == Type::I64 ? Operand::const_i64(0)
                                     : Operand::const_f64(0.0));
    }
  }

  void emit_entry() {
    FnCtx ctx;
    Type ret = lower_type(tp_.entry_tag);
    ctx.fn = module_->add_function(kEntryName, {}, ret);
    Builder b(ctx.fn, nullptr);
    emit_prologue(ctx.fn, b);
    for (const auto& s : tp_.program.top_level) {
      if (std::holds_alternative<ast::FuncDecl>(s->node)) continue;
      emit_stmt(*s, ctx, b);
    }
    if (!ctx.terminated) {
      emit_depth_exit(b);
      b.ret(ret == Type::I64 ? Operand::const_i64(0)
                             : Operand::const_f64(0.0));
    }
  }

  void emit_stmt(const ast::Stmt& s, FnCtx& ctx, Builder& b) {
    if (ctx.terminated) {
      // statements after a return are unreachable; emit into a fresh dead
      // block so the layout stays well formed
      Block* dead =
          ctx.fn->add_block("dead" + std::to_string(ctx.dead_blocks++));
      b.set_insert_point(dead);
      ctx.terminated = false;
    }
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ast::ExprStmt>) {
            emit_expr(*n.expr, ctx, b);
          } else if constexpr (std::is_same_v<T, ast::VarDecl>) {
            Type t = lower_type(n.tag);
            Operand init = emit_expr(*n.init, ctx, b);
            init = promote(init, expr_type(*n.init), t, b);
            Instr* slot = b.alloca_slot(t);
            b.store(init, Operand::of(slot));
            ctx.slots[n.name] = slot;
            ctx.slot_types[n.name] = t;
          } else if constexpr (std::is_same_v<T, ast::Return>) {
            Operand v = emit_expr(*n.expr, ctx, b);
            v = promote(v, expr_type(*n.expr), ctx.fn->ret, b);
            emit_depth_exit(b);
            b.ret(v);
            ctx.terminated = true;
          }
          // FuncDecl handled at module level
        },
        s.node);
  }

  Type expr_type(const ast::Expr& e) const {
    return lower_type(tp_.tag_of(e));
  }

  Operand promote(Operand v, Type from, Type to, Builder& b) {
    if (from == to) return v;
    return Operand::of(b.si_to_fp(v));
  }

  // Int / and % guarded against divisor 0 and INT64_MIN / -1 (both trap in
  // native code); results follow the protected wrapping semantics.
  Operand emit_protected_div(Op op, Operand lhs, Operand rhs, Builder& b) {
    Operand zero = Operand::const_i64(0);
    Instr* is0 = b.icmp(Op::ICmpEq, rhs, zero);
    Instr* is_min =
        b.icmp(Op::ICmpEq, lhs, Operand::const_i64(INT64_MIN));
    Instr* is_m1 = b.icmp(Op::ICmpEq, rhs, Operand::const_i64(-1));
    Instr* ovf = b.binop(Op::IMul, Operand::of(is_min), Operand::of(is_m1));
    Instr* bad = b.binop(Op::IAdd, Operand::of(is0), Operand::of(ovf));
    Instr* safe_rhs =
        b.select(Operand::of(bad), Operand::const_i64(1), rhs);
    Instr* raw = b.binop(op, lhs, Operand::of(safe_rhs));
    Operand on_ovf = op == Op::SDiv ? Operand::const_i64(INT64_MIN) : zero;
    Instr* r1 = b.select(Operand::of(ovf), on_ovf, Operand::of(raw));
    Instr* r2 = b.select(Operand::of(is0), zero, Operand::of(r1));
    return Operand::of(r2);
  }

  Operand emit_expr(const ast::Expr& e, FnCtx& ctx, Builder& b) {
    return std::visit(
        [&](const auto& n) -> Operand {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ast::IntLiteral>) {
            return Operand::const_i64(n.value);
          } else if constexpr (std::is_same_v<T, ast::DoubleLiteral>) {
            return Operand::const_f64(n.value);
          } else if constexpr (std::is_same_v<T, ast::Identifier>) {
            Instr* slot = ctx.slots.at(n.name);
            return Operand::of(
                b.load(Operand::of(slot), ctx.slot_types.at(n.name)));
          } else if constexpr (std::is_same_v<T, ast::BinaryOp>) {
            Type t = expr_type(e);
            Operand lhs = emit_expr(*n.lhs, ctx, b);
            Operand rhs = emit_expr(*n.rhs, ctx, b);
            lhs = promote(lhs, expr_type(*n.lhs), t, b);
            rhs = promote(rhs, expr_type(*n.rhs), t, b);
            if (t == Type::I64) {
              switch (n.op) {
                case ast::BinOp::Add:
                  return Operand::of(b.binop(Op::IAdd, lhs, rhs));
                case ast::BinOp::Sub:
                  return Operand::of(b.binop(Op::ISub, lhs, rhs));
                case ast::BinOp::Mul:
                  return Operand::of(b.binop(Op::IMul, lhs, rhs));
                case ast::BinOp::Div:
                  return emit_protected_div(Op::SDiv, lhs, rhs, b);
                case ast::BinOp::Mod:
                  return emit_protected_div(Op::SRem, lhs, rhs, b);
              }
            }
            switch (n.op) {
              case ast::BinOp::Add:
                return Operand::of(b.binop(Op::FAdd, lhs, rhs));
              case ast::BinOp::Sub:
                return Operand::of(b.binop(Op::FSub, lhs, rhs));
              case ast::BinOp::Mul:
                return Operand::of(b.binop(Op::FMul, lhs, rhs));
              case ast::BinOp::Div:
                return Operand::of(b.binop(Op::FDiv, lhs, rhs));
              default:
                throw CodegenError("'%' reached float lowering");
            }
          } else if constexpr (std::is_same_v<T, ast::UnaryNeg>) {
            Operand v = emit_expr(*n.operand, ctx, b);
            if (expr_type(e) == Type::I64)
              return Operand::of(
                  b.binop(Op::ISub, Operand::const_i64(0), v));
            return Operand::of(b.fneg(v));
          } else if constexpr (std::is_same_v<T, ast::Call>) {
            std::vector<Operand> args;
            std::vector<Type> param_types;
            Type ret;
            int fn_idx = -1, ext_idx = -1;
            if (auto it = fn_index_.find(n.callee); it != fn_index_.end()) {
              fn_idx = it->second;
              param_types = module_->functions[fn_idx]->params;
              ret = module_->functions[fn_idx]->ret;
            } else {
              const NativeCallable* nc = registry_.find(n.callee);
              if (!nc)
                throw CodegenError("call to unknown function '" + n.callee +
                                   "'");
              ExternDecl decl{n.callee, {}, lower_type(nc->sig.ret)};
              for (TypeTag t : nc->sig.params)
                decl.params.push_back(lower_type(t));
              param_types = decl.params;
              ret = decl.ret;
              ext_idx = module_->add_extern(std::move(decl));
            }
            for (size_t i = 0; i < n.args.size(); ++i) {
              Operand a = emit_expr(*n.args[i], ctx, b);
              a = promote(a, expr_type(*n.args[i]), param_types[i], b);
              args.push_back(a);
            }
            Instr* call =
                fn_idx >= 0
                    ? b.call_fn(fn_idx, ret, std::move(args))
                    : b.call_ext(ext_idx, ret, std::move(args));
            return Operand::of(call);
          } else {
            static_assert(std::is_same_v<T, ast::Assignment>);
            Instr* slot = ctx.slots.at(n.target);
            Type t = ctx.slot_types.at(n.target);
            Operand v = emit_expr(*n.value, ctx, b);
            v = promote(v, expr_type(*n.value), t, b);
            b.store(v, Operand::of(slot));
            return v;  // assignment yields the stored value
          }
        },
        e.node);
  }

  const ast::TypedProgram& tp_;
  const NativeRegistry& registry_;
  ModulePtr module_;
  std::unordered_map<std::string, int> fn_index_;
  uint32_t depth_global_ = 0;
  int trap_ext_ = 0;
};

}  // namespace

ModulePtr codegen_program(const ast::TypedProgram& program,
                          const NativeRegistry& registry) {
  Codegen cg(program, registry);
  return cg.run();
}

}  // namespace gpjit::ir
