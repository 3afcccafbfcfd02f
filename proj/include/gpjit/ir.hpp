#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gpjit/errors.hpp"

namespace gpjit::ir {

// Minimal SSA-form IR: typed instructions in basic blocks, constants as
// operands, stack slots via alloca, no phi nodes (the source language has no
// joining control flow; the verifier enforces an acyclic CFG).

enum class Type : uint8_t { Void, I64, F64, Ptr };

const char* type_str(Type t);

enum class Op : uint8_t {
  Alloca,  // () -> Ptr; aux_type = slot type
  Load,    // (ptr) -> slot type
  Store,   // (value, ptr) -> void
  IAdd,
  ISub,
  IMul,
  SDiv,    // raw division; codegen guards divisor 0 and INT64_MIN/-1
  SRem,
  FAdd,
  FSub,
  FMul,
  FDiv,
  FNeg,
  ICmpEq,  // (i64, i64) -> i64 0/1
  ICmpNe,
  ICmpSgt,
  Select,  // (cond i64, a, b) -> type of a/b
  SIToFP,  // (i64) -> f64
  Call,    // args -> callee return type
  Br,
  CondBr,  // (cond i64); succ0 taken when cond != 0
  Ret,     // (value), type per function
};

const char* op_str(Op op);

struct Instr;
struct Block;
struct Function;
struct Module;

struct Operand {
  enum class Kind : uint8_t { None, Instr, ConstI, ConstF, Param, Global };
  Kind kind = Kind::None;
  Instr* instr = nullptr;
  int64_t bits = 0;  // ConstI value, ConstF bit pattern, Param/Global index

  static Operand none() { return {}; }
  static Operand of(Instr* i) { return {Kind::Instr, i, 0}; }
  static Operand const_i64(int64_t v) { return {Kind::ConstI, nullptr, v}; }
  static Operand const_f64(double v) {
    return {Kind::ConstF, nullptr, std::bit_cast<int64_t>(v)};
  }
  static Operand param(uint32_t i) {
    return {Kind::Param, nullptr, int64_t(i)};
  }
  static Operand global(uint32_t i) {
    return {Kind::Global, nullptr, int64_t(i)};
  }

  bool is(Kind k) const { return kind == k; }
  bool is_const() const { return kind == Kind::ConstI || kind == Kind::ConstF; }
  int64_t const_i() const { return bits; }
  double const_f() const { return std::bit_cast<double>(bits); }
  uint32_t index() const { return uint32_t(bits); }

  bool same_as(const Operand& o) const {
    return kind == o.kind && instr == o.instr && bits == o.bits;
  }
};

struct Instr {
  Op op;
  Type type = Type::Void;     // result type
  Type aux_type = Type::Void; // Alloca: slot type
  std::vector<Operand> args;
  int callee_fn = -1;   // Call: index into Module::functions
  int callee_ext = -1;  // Call: index into Module::externs
  Block* succ0 = nullptr;
  Block* succ1 = nullptr;
  Block* parent = nullptr;
  uint32_t id = 0;  // assigned by Function::renumber

  bool is_terminator() const {
    return op == Op::Br || op == Op::CondBr || op == Op::Ret;
  }
  bool has_side_effects() const {
    return op == Op::Store || op == Op::Call || is_terminator();
  }
};

struct Block {
  std::string name;
  std::vector<Instr*> instrs;
  Function* parent = nullptr;

  Instr* terminator() const {
    return instrs.empty() ? nullptr : instrs.back();
  }
};

struct ExternDecl {
  std::string name;
  std::vector<Type> params;
  Type ret = Type::Void;
};

struct GlobalVar {
  std::string name;
  Type type = Type::I64;
};

struct Function {
  std::string name;
  std::vector<Type> params;
  Type ret = Type::I64;
  std::vector<std::unique_ptr<Block>> blocks;  // blocks[0] is the entry

  Block* add_block(std::string name);
  Instr* create(Op op, Type type, std::vector<Operand> args);
  void renumber();  // assign dump ids in layout order

  // Remove an instruction from its block (memory stays in the arena).
  static void erase_from_block(Instr* in);
  // Rewrite every use of `from` in this function to `to`.
  void replace_all_uses(Instr* from, Operand to);
  bool has_uses(const Instr* in) const;

 private:
  std::vector<std::unique_ptr<Instr>> arena_;
};

struct Module {
  std::vector<std::unique_ptr<Function>> functions;
  std::vector<ExternDecl> externs;
  std::vector<GlobalVar> globals;

  Function* add_function(std::string name, std::vector<Type> params, Type ret);
  Function* find_function(std::string_view name) const;
  int extern_index(std::string_view name) const;
  int global_index(std::string_view name) const;
  int add_extern(ExternDecl d);  // returns index; reuses an equal decl
  int add_global(GlobalVar g);
};

using ModulePtr = std::unique_ptr<Module>;

// Human-readable dump of the whole module; deterministic for a fixed module.
std::string dump(const Module& m);
std::string dump(const Function& f, const Module& m);

// Structural verification. Returns a list of violations (empty == valid):
// typed operands, defs dominating uses, one terminator per block, acyclic
// CFG, load/store targets are allocas or globals, call signatures match.
std::vector<std::string> verify(const Module& m);

// Convenience: throw CodegenError on the first violation.
void verify_or_throw(const Module& m, const char* phase);

// Appends instructions to a block; thin convenience layer used by codegen
// and the pass implementations.
class Builder {
 public:
  Builder(Function* fn, Block* bb) : fn_(fn), bb_(bb) {}

  void set_insert_point(Block* bb) { bb_ = bb; }
  Block* insert_point() const { return bb_; }
  Function* function() const { return fn_; }

  Instr* alloca_slot(Type slot_type);
  Instr* load(Operand ptr, Type slot_type);
  void store(Operand value, Operand ptr);
  Instr* binop(Op op, Operand a, Operand b);
  Instr* fneg(Operand a);
  Instr* icmp(Op op, Operand a, Operand b);
  Instr* select(Operand cond, Operand a, Operand b);
  Instr* si_to_fp(Operand a);
  Instr* call_fn(int fn_index, Type ret, std::vector<Operand> args);
  Instr* call_ext(int ext_index, Type ret, std::vector<Operand> args);
  void br(Block* target);
  void cond_br(Operand cond, Block* then_bb, Block* else_bb);
  void ret(Operand value);

 private:
  Instr* append(Op op, Type type, std::vector<Operand> args);
  Function* fn_;
  Block* bb_;
};

}  // namespace gpjit::ir
