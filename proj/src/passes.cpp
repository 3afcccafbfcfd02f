#include "gpjit/passes.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

#include "gpjit/value.hpp"

namespace gpjit {

std::string PassSelection::describe() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(basic_alias_analysis, "basic-aa");
  add(instruction_combining, "instcombine");
  add(reassociate, "reassociate");
  add(gvn, "gvn");
  add(cfg_simplification, "simplifycfg");
  return out.empty() ? "none" : out;
}

}  // namespace gpjit

namespace gpjit::ir {

namespace {

// Memory slots are either allocas (function-private by construction: the IR
// has no pointer arithmetic and slot addresses never escape) or module
// globals. Basic alias analysis exploits exactly that; without it every
// store and call clobbers everything.
struct SlotKey {
  const Instr* alloca_instr = nullptr;
  int global = -1;
  bool operator<(const SlotKey& o) const {
    return std::tie(alloca_instr, global) < std::tie(o.alloca_instr, o.global);
  }
  bool operator==(const SlotKey& o) const {
    return alloca_instr == o.alloca_instr && global == o.global;
  }
};

SlotKey slot_of(const Operand& ptr) {
  if (ptr.kind == Operand::Kind::Instr) return {ptr.instr, -1};
  return {nullptr, int(ptr.index())};
}

bool is_pure(const Instr* in) {
  switch (in->op) {
    case Op::IAdd:
    case Op::ISub:
    case Op::IMul:
    case Op::SDiv:
    case Op::SRem:
    case Op::FAdd:
    case Op::FSub:
    case Op::FMul:
    case Op::FDiv:
    case Op::FNeg:
    case Op::ICmpEq:
    case Op::ICmpNe:
    case Op::ICmpSgt:
    case Op::Select:
    case Op::SIToFP:
    case Op::Load:
      return true;
    default:
      return false;
  }
}

// ---- constant folding ----

bool fold_int_binop(Op op, int64_t a, int64_t b, int64_t& out) {
  using namespace arith;
  switch (op) {
    case Op::IAdd: out = wrap_add(a, b); return true;
    case Op::ISub: out = wrap_sub(a, b); return true;
    case Op::IMul: out = wrap_mul(a, b); return true;
    case Op::SDiv:
      if (b == 0 || (a == INT64_MIN && b == -1)) return false;
      out = a / b;
      return true;
    case Op::SRem:
      if (b == 0 || (a == INT64_MIN && b == -1)) return false;
      out = a % b;
      return true;
    case Op::ICmpEq: out = a == b ? 1 : 0; return true;
    case Op::ICmpNe: out = a != b ? 1 : 0; return true;
    case Op::ICmpSgt: out = a > b ? 1 : 0; return true;
    default: return false;
  }
}

bool fold_float_binop(Op op, double a, double b, double& out) {
  switch (op) {
    case Op::FAdd: out = a + b; return true;
    case Op::FSub: out = a - b; return true;
    case Op::FMul: out = a * b; return true;
    case Op::FDiv: out = a / b; return true;
    default: return false;
  }
}

// Returns a replacement operand if the instruction folds to a constant or
// an existing value.
bool simplify(Instr* in, Operand& repl) {
  auto& a0 = in->args;
  auto ci = [&](size_t i) { return a0[i].const_i(); };
  bool c0 = !a0.empty() && a0[0].is_const();
  bool c1 = a0.size() > 1 && a0[1].is_const();

  switch (in->op) {
    case Op::IAdd:
    case Op::ISub:
    case Op::IMul:
    case Op::SDiv:
    case Op::SRem:
    case Op::ICmpEq:
    case Op::ICmpNe:
    case Op::ICmpSgt: {
      if (c0 && c1) {
        int64_t out;
        if (fold_int_binop(in->op, ci(0), ci(1), out)) {
          repl = Operand::const_i64(out);
          return true;
        }
      }
      // algebraic identities, int only (wrapping makes them exact)
      if (in->op == Op::IAdd) {
        if (c0 && ci(0) == 0) { repl = a0[1]; return true; }
        if (c1 && ci(1) == 0) { repl = a0[0]; return true; }
      } else if (in->op == Op::ISub) {
        if (c1 && ci(1) == 0) { repl = a0[0]; return true; }
        if (a0[0].same_as(a0[1])) { repl = Operand::const_i64(0); return true; }
      } else if (in->op == Op::IMul) {
        if (c0 && ci(0) == 1) { repl = a0[1]; return true; }
        if (c1 && ci(1) == 1) { repl = a0[0]; return true; }
        if ((c0 && ci(0) == 0) || (c1 && ci(1) == 0)) {
          repl = Operand::const_i64(0);
          return true;
        }
      } else if (in->op == Op::SDiv) {
        if (c1 && ci(1) == 1) { repl = a0[0]; return true; }
      } else if (in->op == Op::SRem) {
        if (c1 && ci(1) == 1) { repl = Operand::const_i64(0); return true; }
      }
      return false;
    }
    case Op::FAdd:
    case Op::FSub:
    case Op::FMul:
    case Op::FDiv: {
      // full-constant folding only; float identities are not value-safe
      if (c0 && c1) {
        double out;
        if (fold_float_binop(in->op, a0[0].const_f(), a0[1].const_f(), out)) {
          repl = Operand::const_f64(out);
          return true;
        }
      }
      return false;
    }
    case Op::FNeg:
      if (c0) {
        repl = Operand::const_f64(-a0[0].const_f());
        return true;
      }
      return false;
    case Op::SIToFP:
      if (c0) {
        repl = Operand::const_f64(double(ci(0)));
        return true;
      }
      return false;
    case Op::Select:
      if (c0) {
        repl = ci(0) != 0 ? a0[1] : a0[2];
        return true;
      }
      if (a0[1].same_as(a0[2])) {
        repl = a0[1];
        return true;
      }
      return false;
    default:
      return false;
  }
}

// ---- instruction combining ----

struct AllocaFacts {
  std::set<const Instr*> loaded;  // allocas with at least one load anywhere
};

AllocaFacts collect_alloca_facts(const Function& f) {
  AllocaFacts facts;
  for (const auto& bb : f.blocks)
    for (const Instr* in : bb->instrs)
      if (in->op == Op::Load &&
          in->args[0].kind == Operand::Kind::Instr)
        facts.loaded.insert(in->args[0].instr);
  return facts;
}

// Scan backwards inside the block for a value available to this load.
bool find_available_load(Function& f, Block* bb, size_t load_idx, bool has_aa,
                         Operand& out) {
  Instr* load = bb->instrs[load_idx];
  SlotKey want = slot_of(load->args[0]);
  bool want_is_alloca = want.alloca_instr != nullptr;
  for (size_t j = load_idx; j-- > 0;) {
    Instr* in = bb->instrs[j];
    if (in->op == Op::Store) {
      SlotKey sk = slot_of(in->args[1]);
      if (sk == want) {
        out = in->args[0];
        return true;
      }
      if (!has_aa) return false;  // unknown aliasing, give up
      continue;  // distinct slot, cannot alias
    }
    if (in->op == Op::Load) {
      if (slot_of(in->args[0]) == want) {
        out = Operand::of(in);
        return true;
      }
      continue;
    }
    if (in->op == Op::Call) {
      // calls may write globals; allocas are private to this frame
      if (!has_aa || !want_is_alloca) return false;
      continue;
    }
  }
  (void)f;
  return false;
}

bool instcombine_function(Function& f, bool has_aa) {
  bool changed_any = false;
  for (bool changed = true; changed;) {
    changed = false;

    for (auto& bb : f.blocks) {
      auto instrs = bb->instrs;  // snapshot, entries may be erased
      for (size_t i = 0; i < instrs.size(); ++i) {
        Instr* in = instrs[i];
        if (in->parent != bb.get()) continue;  // already erased
        Operand repl;
        if (is_pure(in) && in->op != Op::Load && simplify(in, repl)) {
          f.replace_all_uses(in, repl);
          Function::erase_from_block(in);
          changed = true;
          continue;
        }
        if (in->op == Op::Load) {
          auto pos =
              std::find(bb->instrs.begin(), bb->instrs.end(), in);
          size_t idx = size_t(pos - bb->instrs.begin());
          Operand avail;
          if (find_available_load(f, bb.get(), idx, has_aa, avail)) {
            f.replace_all_uses(in, avail);
            Function::erase_from_block(in);
            changed = true;
            continue;
          }
        }
      }
    }

    // dead pure instructions
    for (auto& bb : f.blocks) {
      auto instrs = bb->instrs;
      for (Instr* in : instrs) {
        if (in->parent != bb.get()) continue;
        if (is_pure(in) && !f.has_uses(in)) {
          Function::erase_from_block(in);
          changed = true;
        }
      }
    }

    // allocas never read: the slot is unobservable, drop it and its stores
    AllocaFacts facts = collect_alloca_facts(f);
    for (auto& bb : f.blocks) {
      auto instrs = bb->instrs;
      for (Instr* in : instrs) {
        if (in->parent != bb.get()) continue;
        if (in->op == Op::Store &&
            in->args[1].kind == Operand::Kind::Instr &&
            !facts.loaded.count(in->args[1].instr)) {
          Function::erase_from_block(in);
          changed = true;
        } else if (in->op == Op::Alloca && !f.has_uses(in)) {
          Function::erase_from_block(in);
          changed = true;
        }
      }
    }

    changed_any |= changed;
  }
  return changed_any;
}

// ---- reassociate ----

std::map<const Instr*, int> use_counts(const Function& f) {
  std::map<const Instr*, int> counts;
  for (const auto& bb : f.blocks)
    for (const Instr* in : bb->instrs)
      for (const Operand& op : in->args)
        if (op.kind == Operand::Kind::Instr) ++counts[op.instr];
  return counts;
}

void collect_leaves(Instr* root, Op op,
                    const std::map<const Instr*, int>& uses,
                    std::vector<Operand>& leaves,
                    std::vector<Instr*>& chain) {
  for (const Operand& o : root->args) {
    bool expand = o.kind == Operand::Kind::Instr && o.instr->op == op &&
                  o.instr->parent != nullptr;
    if (expand) {
      auto it = uses.find(o.instr);
      expand = it != uses.end() && it->second == 1;
    }
    if (expand) {
      chain.push_back(o.instr);
      collect_leaves(o.instr, op, uses, leaves, chain);
    } else {
      leaves.push_back(o);
    }
  }
}

bool reassociate_function(Function& f) {
  bool changed = false;
  auto uses = use_counts(f);
  for (auto& bb : f.blocks) {
    auto instrs = bb->instrs;  // snapshot
    for (Instr* in : instrs) {
      if (in->parent != bb.get()) continue;
      if (in->op != Op::IAdd && in->op != Op::IMul) continue;
      // only handle roots: users are not the same opcode chain
      bool is_root = true;
      for (const auto& bb2 : f.blocks)
        for (const Instr* user : bb2->instrs)
          if (user->op == in->op)
            for (const Operand& o : user->args)
              if (o.kind == Operand::Kind::Instr && o.instr == in)
                is_root = false;
      if (!is_root) continue;

      std::vector<Operand> leaves;
      std::vector<Instr*> chain;
      collect_leaves(in, in->op, uses, leaves, chain);
      if (chain.empty()) continue;  // nothing to reassociate

      int64_t acc = in->op == Op::IAdd ? 0 : 1;
      std::vector<Operand> values;
      int n_consts = 0;
      for (const Operand& o : leaves) {
        if (o.kind == Operand::Kind::ConstI) {
          ++n_consts;
          acc = in->op == Op::IAdd ? arith::wrap_add(acc, o.const_i())
                                   : arith::wrap_mul(acc, o.const_i());
        } else {
          values.push_back(o);
        }
      }
      bool identity =
          (in->op == Op::IAdd && acc == 0) || (in->op == Op::IMul && acc == 1);
      if (n_consts < 2 && !(n_consts == 1 && identity)) continue;

      // rebuild: left-leaning chain over the non-const leaves, constant last
      Operand result;
      if (in->op == Op::IMul && acc == 0) {
        result = Operand::const_i64(0);
      } else if (values.empty()) {
        result = Operand::const_i64(acc);
      } else {
        auto insert_before = [&](Instr* pos, Instr* nu) {
          auto it = std::find(pos->parent->instrs.begin(),
                              pos->parent->instrs.end(), pos);
          nu->parent = pos->parent;
          pos->parent->instrs.insert(it, nu);
        };
        Operand cur = values[0];
        for (size_t i = 1; i < values.size(); ++i) {
          Instr* nu = f.create(in->op, Type::I64, {cur, values[i]});
          insert_before(in, nu);
          cur = Operand::of(nu);
        }
        if (!identity) {
          Instr* nu =
              f.create(in->op, Type::I64, {cur, Operand::const_i64(acc)});
          insert_before(in, nu);
          cur = Operand::of(nu);
        }
        result = cur;
      }
      f.replace_all_uses(in, result);
      Function::erase_from_block(in);
      for (Instr* c : chain)
        if (c->parent && !f.has_uses(c)) Function::erase_from_block(c);
      uses = use_counts(f);
      changed = true;
    }
  }
  return changed;
}

// ---- global value numbering ----

struct GvnState {
  std::map<std::string, Instr*> exprs;
  std::map<SlotKey, Operand> memory;
};

std::string operand_key(const Operand& o,
                        const std::map<const Instr*, int>& vn) {
  switch (o.kind) {
    case Operand::Kind::ConstI: return "i" + std::to_string(o.bits);
    case Operand::Kind::ConstF: return "f" + std::to_string(o.bits);
    case Operand::Kind::Param: return "p" + std::to_string(o.index());
    case Operand::Kind::Global: return "g" + std::to_string(o.index());
    case Operand::Kind::Instr: {
      auto it = vn.find(o.instr);
      return "v" + std::to_string(it == vn.end() ? -1 : it->second);
    }
    default: return "_";
  }
}

bool gvn_function(Function& f, bool has_aa) {
  // preds; the lowering produces tree-shaped CFGs (every block has at most
  // one predecessor), which makes per-path memory state exact
  std::map<const Block*, int> pred_count;
  for (const auto& bb : f.blocks) {
    const Instr* t = bb->terminator();
    if (!t) continue;
    if (t->succ0) ++pred_count[t->succ0];
    if (t->op == Op::CondBr && t->succ1) ++pred_count[t->succ1];
  }
  bool tree_cfg = true;
  for (const auto& [b, n] : pred_count)
    if (n > 1) tree_cfg = false;

  std::map<const Instr*, int> vn;
  int next_vn = 0;
  bool changed = false;

  // DFS along the CFG tree from the entry, with state copied per branch.
  struct WorkItem {
    Block* bb;
    GvnState state;
  };
  std::vector<WorkItem> work;
  work.push_back({f.blocks.front().get(), {}});

  std::set<Block*> visited;
  while (!work.empty()) {
    WorkItem item = std::move(work.back());
    work.pop_back();
    Block* bb = item.bb;
    if (visited.count(bb)) continue;
    visited.insert(bb);
    GvnState st = std::move(item.state);
    if (!tree_cfg) st = {};  // merge point possible: drop inherited facts

    auto instrs = bb->instrs;  // snapshot
    for (Instr* in : instrs) {
      if (in->parent != bb) continue;
      switch (in->op) {
        case Op::Store: {
          SlotKey sk = slot_of(in->args[1]);
          if (has_aa) {
            st.memory[sk] = in->args[0];
          } else {
            st.memory.clear();
            st.memory[sk] = in->args[0];
          }
          break;
        }
        case Op::Load: {
          SlotKey sk = slot_of(in->args[0]);
          if (auto it = st.memory.find(sk); it != st.memory.end()) {
            f.replace_all_uses(in, it->second);
            Function::erase_from_block(in);
            changed = true;
          } else {
            st.memory[sk] = Operand::of(in);
            vn[in] = next_vn++;
          }
          break;
        }
        case Op::Call: {
          if (has_aa) {
            // callees can touch globals but never this frame's allocas
            for (auto it = st.memory.begin(); it != st.memory.end();) {
              if (it->first.global >= 0)
                it = st.memory.erase(it);
              else
                ++it;
            }
          } else {
            st.memory.clear();
          }
          vn[in] = next_vn++;
          break;
        }
        case Op::Alloca:
          vn[in] = next_vn++;
          break;
        default: {
          if (!is_pure(in)) break;  // terminators
          std::string key = std::string(op_str(in->op));
          // normalize commutative operand order
          std::vector<std::string> ks;
          for (const Operand& o : in->args) ks.push_back(operand_key(o, vn));
          bool commutative = in->op == Op::IAdd || in->op == Op::IMul ||
                             in->op == Op::FAdd || in->op == Op::FMul ||
                             in->op == Op::ICmpEq || in->op == Op::ICmpNe;
          if (commutative && ks.size() == 2 && ks[1] < ks[0])
            std::swap(ks[0], ks[1]);
          for (const auto& k : ks) key += "," + k;
          if (auto it = st.exprs.find(key); it != st.exprs.end()) {
            vn[in] = vn[it->second];
            f.replace_all_uses(in, Operand::of(it->second));
            Function::erase_from_block(in);
            changed = true;
          } else {
            st.exprs[key] = in;
            vn[in] = next_vn++;
          }
          break;
        }
      }
    }

    const Instr* t = bb->terminator();
    if (t) {
      if (t->op == Op::CondBr) {
        if (t->succ1) work.push_back({t->succ1, st});
        if (t->succ0) work.push_back({t->succ0, std::move(st)});
      } else if (t->succ0) {
        work.push_back({t->succ0, std::move(st)});
      }
    }
  }
  return changed;
}

// ---- CFG simplification ----

bool simplifycfg_function(Function& f) {
  bool changed = false;
  for (bool again = true; again;) {
    again = false;

    // fold constant conditional branches
    for (auto& bb : f.blocks) {
      Instr* t = bb->terminator();
      if (!t || t->op != Op::CondBr) continue;
      if (t->args[0].is_const()) {
        Block* target = t->args[0].const_i() != 0 ? t->succ0 : t->succ1;
        t->op = Op::Br;
        t->args.clear();
        t->succ0 = target;
        t->succ1 = nullptr;
        again = true;
      } else if (t->succ0 == t->succ1) {
        t->op = Op::Br;
        t->args.clear();
        t->succ1 = nullptr;
        again = true;
      }
    }

    // drop unreachable blocks
    std::set<const Block*> reachable;
    std::vector<Block*> stack{f.blocks.front().get()};
    while (!stack.empty()) {
      Block* b = stack.back();
      stack.pop_back();
      if (!reachable.insert(b).second) continue;
      Instr* t = b->terminator();
      if (!t) continue;
      if (t->succ0) stack.push_back(t->succ0);
      if (t->op == Op::CondBr && t->succ1) stack.push_back(t->succ1);
    }
    size_t before = f.blocks.size();
    std::erase_if(f.blocks, [&](const std::unique_ptr<Block>& bb) {
      return !reachable.count(bb.get());
    });
    if (f.blocks.size() != before) again = true;

    // merge straight-line pairs
    std::map<const Block*, int> pred_count;
    for (const auto& bb : f.blocks) {
      Instr* t = bb->terminator();
      if (!t) continue;
      if (t->succ0) ++pred_count[t->succ0];
      if (t->op == Op::CondBr && t->succ1) ++pred_count[t->succ1];
    }
    for (auto& bb : f.blocks) {
      Instr* t = bb->terminator();
      if (!t || t->op != Op::Br) continue;
      Block* succ = t->succ0;
      if (succ == bb.get() || pred_count[succ] != 1) continue;
      if (succ == f.blocks.front().get()) continue;
      // splice successor into this block
      Function::erase_from_block(t);
      for (Instr* in : succ->instrs) {
        in->parent = bb.get();
        bb->instrs.push_back(in);
      }
      succ->instrs.clear();
      std::erase_if(f.blocks, [&](const std::unique_ptr<Block>& b2) {
        return b2.get() == succ;
      });
      again = true;
      break;  // block list changed; restart scan
    }

    changed |= again;
  }
  return changed;
}

}  // namespace

void optimize(Module& m, const PassSelection& passes) {
  if (!passes.any()) return;
  bool has_aa = passes.basic_alias_analysis;
  for (auto& f : m.functions) {
    if (passes.instruction_combining) instcombine_function(*f, has_aa);
    if (passes.reassociate) reassociate_function(*f);
    if (passes.gvn) gvn_function(*f, has_aa);
    if (passes.cfg_simplification) simplifycfg_function(*f);
  }
  auto errs = verify(m);
  if (!errs.empty())
    throw OptimizeError("pass pipeline broke the module: " + errs.front());
}

}  // namespace gpjit::ir
