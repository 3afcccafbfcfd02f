#include "gpjit/ir.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "gpjit/ast.hpp"  // double_literal_text

namespace gpjit::ir {

const char* type_str(Type t) {
  switch (t) {
    case Type::Void: return "void";
    case Type::I64: return "i64";
    case Type::F64: return "f64";
    case Type::Ptr: return "ptr";
  }
  return "?";
}

const char* op_str(Op op) {
  switch (op) {
    case Op::Alloca: return "alloca";
    case Op::Load: return "load";
    case Op::Store: return "store";
    case Op::IAdd: return "iadd";
    case Op::ISub: return "isub";
    case Op::IMul: return "imul";
    case Op::SDiv: return "sdiv";
    case Op::SRem: return "srem";
    case Op::FAdd: return "fadd";
    case Op::FSub: return "fsub";
    case Op::FMul: return "fmul";
    case Op::FDiv: return "fdiv";
    case Op::FNeg: return "fneg";
    case Op::ICmpEq: return "icmp.eq";
    case Op::ICmpNe: return "icmp.ne";
    case Op::ICmpSgt: return "icmp.sgt";
    case Op::Select: return "select";
    case Op::SIToFP: return "sitofp";
    case Op::Call: return "call";
    case Op::Br: return "br";
    case Op::CondBr: return "condbr";
    case Op::Ret: return "ret";
  }
  return "?";
}

Block* Function::add_block(std::string name) {
  auto bb = std::make_unique<Block>();
  bb->name = std::move(name);
  bb->parent = this;
  blocks.push_back(std::move(bb));
  return blocks.back().get();
}

Instr* Function::create(Op op, Type type, std::vector<Operand> args) {
  auto in = std::make_unique<Instr>();
  in->op = op;
  in->type = type;
  in->args = std::move(args);
  arena_.push_back(std::move(in));
  return arena_.back().get();
}

void Function::renumber() {
  uint32_t next = 0;
  for (auto& bb : blocks)
    for (Instr* in : bb->instrs)
      in->id = in->type != Type::Void ? next++ : UINT32_MAX;
}

void Function::erase_from_block(Instr* in) {
  Block* bb = in->parent;
  if (!bb) return;
  bb->instrs.erase(std::remove(bb->instrs.begin(), bb->instrs.end(), in),
                   bb->instrs.end());
  in->parent = nullptr;
}

void Function::replace_all_uses(Instr* from, Operand to) {
  for (auto& bb : blocks)
    for (Instr* in : bb->instrs)
      for (Operand& op : in->args)
        if (op.kind == Operand::Kind::Instr && op.instr == from) op = to;
}

bool Function::has_uses(const Instr* in) const {
  for (const auto& bb : blocks)
    for (const Instr* user : bb->instrs)
      for (const Operand& op : user->args)
        if (op.kind == Operand::Kind::Instr && op.instr == in) return true;
  return false;
}

Function* Module::add_function(std::string name, std::vector<Type> params,
                               Type ret) {
  auto fn = std::make_unique<Function>();
  fn->name = std::move(name);
  fn->params = std::move(params);
  fn->ret = ret;
  functions.push_back(std::move(fn));
  return functions.back().get();
}

Function* Module::find_function(std::string_view name) const {
  for (const auto& f : functions)
    if (f->name == name) return f.get();
  return nullptr;
}

int Module::extern_index(std::string_view name) const {
  for (size_t i = 0; i < externs.size(); ++i)
    if (externs[i].name == name) return int(i);
  return -1;
}

int Module::global_index(std::string_view name) const {
  for (size_t i = 0; i < globals.size(); ++i)
    if (globals[i].name == name) return int(i);
  return -1;
}

int Module::add_extern(ExternDecl d) {
  int idx = extern_index(d.name);
  if (idx >= 0) return idx;
  externs.push_back(std::move(d));
  return int(externs.size()) - 1;
}

int Module::add_global(GlobalVar g) {
  int idx = global_index(g.name);
  if (idx >= 0) return idx;
  globals.push_back(std::move(g));
  return int(globals.size()) - 1;
}

// ---- Builder ----

Instr* Builder::append(Op op, Type type, std::vector<Operand> args) {
  Instr* in = fn_->create(op, type, std::move(args));
  in->parent = bb_;
  bb_->instrs.push_back(in);
  return in;
}

Instr* Builder::alloca_slot(Type slot_type) {
  Instr* in = append(Op::Alloca, Type::Ptr, {});
  in->aux_type = slot_type;
  return in;
}

Instr* Builder::load(Operand ptr, Type slot_type) {
  return append(Op::Load, slot_type, {ptr});
}

void Builder::store(Operand value, Operand ptr) {
  append(Op::Store, Type::Void, {value, ptr});
}

Instr* Builder::binop(Op op, Operand a, Operand b) {
  Type t = (op >= Op::FAdd && op <= Op::FDiv) ? Type::F64 : Type::I64;
  return append(op, t, {a, b});
}

Instr* Builder::fneg(Operand a) { return append(Op::FNeg, Type::F64, {a}); }

Instr* Builder::icmp(Op op, Operand a, Operand b) {
  return append(op, Type::I64, {a, b});
}

Instr* Builder::select(Operand cond, Operand a, Operand b) {
  // result type follows the value operands
  Type t = Type::I64;
  switch (a.kind) {
    case Operand::Kind::ConstF: t = Type::F64; break;
    case Operand::Kind::Instr: t = a.instr->type; break;
    case Operand::Kind::Param: t = fn_->params[a.index()]; break;
    default: break;
  }
  return append(Op::Select, t, {cond, a, b});
}

Instr* Builder::si_to_fp(Operand a) {
  return append(Op::SIToFP, Type::F64, {a});
}

Instr* Builder::call_fn(int fn_index, Type ret, std::vector<Operand> args) {
  Instr* in = append(Op::Call, ret, std::move(args));
  in->callee_fn = fn_index;
  return in;
}

Instr* Builder::call_ext(int ext_index, Type ret, std::vector<Operand> args) {
  Instr* in = append(Op::Call, ret, std::move(args));
  in->callee_ext = ext_index;
  return in;
}

void Builder::br(Block* target) {
  Instr* in = append(Op::Br, Type::Void, {});
  in->succ0 = target;
}

void Builder::cond_br(Operand cond, Block* then_bb, Block* else_bb) {
  Instr* in = append(Op::CondBr, Type::Void, {cond});
  in->succ0 = then_bb;
  in->succ1 = else_bb;
}

void Builder::ret(Operand value) { append(Op::Ret, Type::Void, {value}); }

// ---- Dump ----

namespace {

std::string operand_str(const Operand& op, const Module& m) {
  switch (op.kind) {
    case Operand::Kind::None: return "<none>";
    case Operand::Kind::Instr: return "%" + std::to_string(op.instr->id);
    case Operand::Kind::ConstI: return std::to_string(op.const_i());
    case Operand::Kind::ConstF: {
      double v = op.const_f();
      if (std::isfinite(v)) return ast::double_literal_text(v);
      std::ostringstream os;
      os << "f64.bits(0x" << std::hex << uint64_t(op.bits) << ")";
      return os.str();
    }
    case Operand::Kind::Param: return "%arg" + std::to_string(op.index());
    case Operand::Kind::Global:
      return "@" + m.globals[op.index()].name;
  }
  return "?";
}

void dump_function(std::ostringstream& os, const Function& f,
                   const Module& m) {
  os << "func " << type_str(f.ret) << " @" << f.name << "(";
  for (size_t i = 0; i < f.params.size(); ++i) {
    if (i) os << ", ";
    os << type_str(f.params[i]) << " %arg" << i;
  }
  os << ") {\n";
  for (const auto& bb : f.blocks) {
    os << bb->name << ":\n";
    for (const Instr* in : bb->instrs) {
      os << "  ";
      if (in->type != Type::Void)
        os << "%" << in->id << " = ";
      os << op_str(in->op);
      if (in->op == Op::Alloca) os << " " << type_str(in->aux_type);
      if (in->op == Op::Call) {
        const std::string& callee = in->callee_fn >= 0
                                        ? m.functions[in->callee_fn]->name
                                        : m.externs[in->callee_ext].name;
        os << " @" << callee << "(";
        for (size_t i = 0; i < in->args.size(); ++i) {
          if (i) os << ", ";
          os << operand_str(in->args[i], m);
        }
        os << ")";
      } else if (in->op == Op::Br) {
        os << " " << in->succ0->name;
      } else if (in->op == Op::CondBr) {
        os << " " << operand_str(in->args[0], m) << ", " << in->succ0->name
           << ", " << in->succ1->name;
      } else {
        for (size_t i = 0; i < in->args.size(); ++i)
          os << (i ? ", " : " ") << operand_str(in->args[i], m);
      }
      os << "\n";
    }
  }
  os << "}\n";
}

}  // namespace

std::string dump(const Function& f, const Module& m) {
  const_cast<Function&>(f).renumber();
  std::ostringstream os;
  dump_function(os, f, m);
  return os.str();
}

std::string dump(const Module& m) {
  std::ostringstream os;
  os << "module {\n";
  for (const auto& g : m.globals)
    os << "global " << type_str(g.type) << " @" << g.name << "\n";
  for (const auto& e : m.externs) {
    os << "extern " << type_str(e.ret) << " @" << e.name << "(";
    for (size_t i = 0; i < e.params.size(); ++i)
      os << (i ? ", " : "") << type_str(e.params[i]);
    os << ")\n";
  }
  for (const auto& f : m.functions) {
    f->renumber();
    dump_function(os, *f, m);
  }
  os << "}\n";
  return os.str();
}

// ---- Verifier ----

namespace {

Type operand_type(const Operand& op, const Function& f, const Module& m) {
  switch (op.kind) {
    case Operand::Kind::None: return Type::Void;
    case Operand::Kind::Instr: return op.instr->type;
    case Operand::Kind::ConstI: return Type::I64;
    case Operand::Kind::ConstF: return Type::F64;
    case Operand::Kind::Param:
      return op.index() < f.params.size() ? f.params[op.index()] : Type::Void;
    case Operand::Kind::Global:
      return op.index() < m.globals.size() ? Type::Ptr : Type::Void;
  }
  return Type::Void;
}

struct VerifyCtx {
  const Module& m;
  std::vector<std::string>& out;

  void err(const Function& f, const std::string& msg) {
    out.push_back("function @" + f.name + ": " + msg);
  }
};

void verify_function(VerifyCtx& ctx, const Function& f) {
  const Module& m = ctx.m;
  if (f.blocks.empty()) {
    ctx.err(f, "no blocks");
    return;
  }

  // block membership and terminators
  std::map<const Block*, size_t> block_index;
  for (size_t i = 0; i < f.blocks.size(); ++i)
    block_index[f.blocks[i].get()] = i;
  for (const auto& bb : f.blocks) {
    if (bb->instrs.empty()) {
      ctx.err(f, "block " + bb->name + " is empty");
      continue;
    }
    for (size_t i = 0; i < bb->instrs.size(); ++i) {
      const Instr* in = bb->instrs[i];
      if (in->parent != bb.get())
        ctx.err(f, "instruction with stale parent in " + bb->name);
      bool last = i + 1 == bb->instrs.size();
      if (in->is_terminator() != last)
        ctx.err(f, "terminator placement broken in block " + bb->name);
    }
    const Instr* t = bb->terminator();
    if (t && (t->op == Op::Br || t->op == Op::CondBr)) {
      if (!block_index.count(t->succ0) ||
          (t->op == Op::CondBr && !block_index.count(t->succ1)))
        ctx.err(f, "branch to foreign block from " + bb->name);
    }
  }

  // predecessors, reachability, acyclicity
  std::map<const Block*, std::vector<const Block*>> preds;
  for (const auto& bb : f.blocks) {
    const Instr* t = bb->terminator();
    if (!t) continue;
    if (t->succ0) preds[t->succ0].push_back(bb.get());
    if (t->op == Op::CondBr && t->succ1) preds[t->succ1].push_back(bb.get());
  }
  {
    // DFS from entry detecting cycles
    enum State : uint8_t { White, Gray, Black };
    std::map<const Block*, State> state;
    std::vector<std::pair<const Block*, size_t>> stack;
    auto succs = [](const Block* b) {
      std::vector<const Block*> s;
      const Instr* t = b->terminator();
      if (t && t->succ0) s.push_back(t->succ0);
      if (t && t->op == Op::CondBr && t->succ1) s.push_back(t->succ1);
      return s;
    };
    const Block* entry = f.blocks.front().get();
    stack.push_back({entry, 0});
    state[entry] = Gray;
    while (!stack.empty()) {
      auto& [b, i] = stack.back();
      auto s = succs(b);
      if (i >= s.size()) {
        state[b] = Black;
        stack.pop_back();
        continue;
      }
      const Block* nxt = s[i++];
      if (state[nxt] == Gray) {
        ctx.err(f, "CFG contains a cycle through " + nxt->name);
        return;
      }
      if (state[nxt] == White) {
        state[nxt] = Gray;
        stack.push_back({nxt, 0});
      }
    }
  }

  // dominators (dense iteration; CFGs here are tiny)
  std::map<const Block*, std::set<const Block*>> dom;
  {
    std::set<const Block*> all;
    for (const auto& bb : f.blocks) all.insert(bb.get());
    const Block* entry = f.blocks.front().get();
    for (const auto& bb : f.blocks)
      dom[bb.get()] = bb.get() == entry
                          ? std::set<const Block*>{entry}
                          : all;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& bb : f.blocks) {
        const Block* b = bb.get();
        if (b == entry) continue;
        std::set<const Block*> nd = all;
        if (auto it = preds.find(b); it != preds.end() && !it->second.empty()) {
          for (const Block* p : it->second) {
            std::set<const Block*> inter;
            std::set_intersection(nd.begin(), nd.end(), dom[p].begin(),
                                  dom[p].end(),
                                  std::inserter(inter, inter.begin()));
            nd = std::move(inter);
          }
        } else {
          nd.clear();  // unreachable block dominates nothing meaningful
        }
        nd.insert(b);
        if (nd != dom[b]) {
          dom[b] = std::move(nd);
          changed = true;
        }
      }
    }
  }

  // instruction position index for same-block dominance
  std::map<const Instr*, std::pair<const Block*, size_t>> pos;
  for (const auto& bb : f.blocks)
    for (size_t i = 0; i < bb->instrs.size(); ++i)
      pos[bb->instrs[i]] = {bb.get(), i};

  auto dominates = [&](const Instr* def, const Instr* use) {
    auto [db, di] = pos.at(def);
    auto [ub, ui] = pos.at(use);
    if (db == ub) return di < ui;
    return dom[ub].count(db) > 0;
  };

  for (const auto& bb : f.blocks) {
    for (const Instr* in : bb->instrs) {
      // operand typing per opcode
      auto ty = [&](size_t i) { return operand_type(in->args[i], f, m); };
      auto expect = [&](bool cond, const std::string& what) {
        if (!cond) ctx.err(f, what + " in " + std::string(op_str(in->op)));
      };
      switch (in->op) {
        case Op::Alloca:
          expect(in->aux_type == Type::I64 || in->aux_type == Type::F64,
                 "alloca slot must be scalar");
          expect(in->type == Type::Ptr, "alloca result must be ptr");
          break;
        case Op::Load: {
          expect(in->args.size() == 1, "load arity");
          const Operand& p = in->args[0];
          bool ok_alloca = p.kind == Operand::Kind::Instr &&
                           p.instr->op == Op::Alloca &&
                           p.instr->aux_type == in->type;
          bool ok_global = p.kind == Operand::Kind::Global &&
                           p.index() < m.globals.size() &&
                           m.globals[p.index()].type == in->type;
          expect(ok_alloca || ok_global, "load target must be alloca/global");
          break;
        }
        case Op::Store: {
          expect(in->args.size() == 2, "store arity");
          const Operand& p = in->args[1];
          Type vt = ty(0);
          bool ok_alloca = p.kind == Operand::Kind::Instr &&
                           p.instr->op == Op::Alloca &&
                           p.instr->aux_type == vt;
          bool ok_global = p.kind == Operand::Kind::Global &&
                           p.index() < m.globals.size() &&
                           m.globals[p.index()].type == vt;
          expect(ok_alloca || ok_global, "store target must be alloca/global");
          break;
        }
        case Op::IAdd:
        case Op::ISub:
        case Op::IMul:
        case Op::SDiv:
        case Op::SRem:
        case Op::ICmpEq:
        case Op::ICmpNe:
        case Op::ICmpSgt:
          expect(in->args.size() == 2 && ty(0) == Type::I64 &&
                     ty(1) == Type::I64,
                 "int binop operands");
          expect(in->type == Type::I64, "int binop result");
          break;
        case Op::FAdd:
        case Op::FSub:
        case Op::FMul:
        case Op::FDiv:
          expect(in->args.size() == 2 && ty(0) == Type::F64 &&
                     ty(1) == Type::F64,
                 "float binop operands");
          expect(in->type == Type::F64, "float binop result");
          break;
        case Op::FNeg:
          expect(in->args.size() == 1 && ty(0) == Type::F64, "fneg operand");
          break;
        case Op::Select:
          expect(in->args.size() == 3 && ty(0) == Type::I64 &&
                     ty(1) == in->type && ty(2) == in->type,
                 "select operands");
          break;
        case Op::SIToFP:
          expect(in->args.size() == 1 && ty(0) == Type::I64 &&
                     in->type == Type::F64,
                 "sitofp operands");
          break;
        case Op::Call: {
          const std::vector<Type>* sig_params = nullptr;
          Type sig_ret = Type::Void;
          if (in->callee_fn >= 0 &&
              in->callee_fn < int(m.functions.size())) {
            sig_params = &m.functions[in->callee_fn]->params;
            sig_ret = m.functions[in->callee_fn]->ret;
          } else if (in->callee_ext >= 0 &&
                     in->callee_ext < int(m.externs.size())) {
            sig_params = &m.externs[in->callee_ext].params;
            sig_ret = m.externs[in->callee_ext].ret;
          }
          if (!sig_params) {
            ctx.err(f, "call without a valid callee");
            break;
          }
          expect(in->args.size() == sig_params->size(), "call arity");
          if (in->args.size() == sig_params->size())
            for (size_t i = 0; i < in->args.size(); ++i)
              expect(ty(i) == (*sig_params)[i], "call argument type");
          expect(in->type == sig_ret, "call result type");
          break;
        }
        case Op::Br:
          break;
        case Op::CondBr:
          expect(in->args.size() == 1 && ty(0) == Type::I64,
                 "condbr condition");
          break;
        case Op::Ret:
          expect(in->args.size() == 1 && ty(0) == f.ret, "ret value type");
          break;
      }
      // defs dominate uses
      for (const Operand& op : in->args) {
        if (op.kind != Operand::Kind::Instr) continue;
        if (!pos.count(op.instr)) {
          ctx.err(f, "use of an instruction outside any block");
          continue;
        }
        if (!dominates(op.instr, in))
          ctx.err(f, "use before definition of %" +
                         std::to_string(op.instr->id));
      }
    }
  }
}

}  // namespace

std::vector<std::string> verify(const Module& m) {
  std::vector<std::string> out;
  VerifyCtx ctx{m, out};
  for (const auto& f : m.functions) {
    f->renumber();
    verify_function(ctx, *f);
  }
  return out;
}

void verify_or_throw(const Module& m, const char* phase) {
  auto errs = verify(m);
  if (!errs.empty())
    throw CodegenError(std::string(phase) + " verification failed: " +
                       errs.front() + " (" + std::to_string(errs.size()) +
                       " issue(s))");
}

}  // namespace gpjit::ir
