#include <sys/mman.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <unordered_map>

#include "gpjit/codegen.hpp"
#include "gpjit/engine.hpp"

// x86-64 SysV back end. Generated functions use one uniform signature,
// uint64_t fn(uint64_t* args): every value travels as raw 8-byte bits
// (doubles bit-cast), so the host trampoline and internal calls share one
// convention regardless of arity.

namespace gpjit::ir {

namespace {

#if defined(__x86_64__)
constexpr bool kJitSupported = true;
#else
constexpr bool kJitSupported = false;
#endif

class JitEngine;

struct JitState {
  std::jmp_buf env;
  std::exception_ptr pending;
};

extern "C" void gpjit_jit_trap(JitState* st) { longjmp(st->env, 1); }

uint64_t invoke_native(const NativeCallable* nc, const uint64_t* raw) {
  Value args[16];
  std::vector<Value> spill;
  Value* av = args;
  size_t n = nc->sig.params.size();
  if (n > 16) {
    spill.resize(n);
    av = spill.data();
  }
  for (size_t i = 0; i < n; ++i)
    av[i] = nc->sig.params[i] == ast::TypeTag::Int
                ? Value::of_int(int64_t(raw[i]))
                : Value::of_double(std::bit_cast<double>(raw[i]));
  Value out = nc->fn(std::span<const Value>(av, n));
  if (out.tag() != nc->sig.ret)
    throw Error("native '" + nc->name + "' returned a value of the wrong type");
  return out.is_int() ? uint64_t(out.as_int())
                      : std::bit_cast<uint64_t>(out.as_double());
}

// Exceptions must not unwind through JIT frames (no unwind tables there);
// park them and longjmp back to the run wrapper instead. This frame keeps
// only trivially destructible locals so the longjmp is well defined.
extern "C" uint64_t gpjit_native_bridge(const NativeCallable* nc,
                                        const uint64_t* raw, JitState* st) {
  try {
    return invoke_native(nc, raw);
  } catch (...) {
    st->pending = std::current_exception();
  }
  longjmp(st->env, 2);
}

enum Reg : uint8_t { RAX = 0, RCX = 1, RDX = 2, RSI = 6, RDI = 7, R11 = 11 };

class Asm {
 public:
  std::vector<uint8_t> code;

  size_t pos() const { return code.size(); }
  void byte(uint8_t b) { code.push_back(b); }
  void bytes(std::initializer_list<uint8_t> bs) {
    code.insert(code.end(), bs);
  }
  void imm32(int32_t v) {
    for (int i = 0; i < 4; ++i) byte(uint8_t(uint32_t(v) >> (8 * i)));
  }
  void imm64(uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(uint8_t(v >> (8 * i)));
  }
  void patch32(size_t at, int32_t v) {
    for (int i = 0; i < 4; ++i) code[at + i] = uint8_t(uint32_t(v) >> (8 * i));
  }

  void mov_reg_imm64(Reg r, uint64_t v) {
    byte(r >= 8 ? 0x49 : 0x48);
    byte(0xB8 + (r & 7));
    imm64(v);
  }
  // mov r, [rbp+disp]
  void mov_reg_rbp(Reg r, int32_t disp) {
    byte(r >= 8 ? 0x4C : 0x48);
    byte(0x8B);
    byte(0x85 | ((r & 7) << 3));
    imm32(disp);
  }
  // mov [rbp+disp], r
  void mov_rbp_reg(int32_t disp, Reg r) {
    byte(r >= 8 ? 0x4C : 0x48);
    byte(0x89);
    byte(0x85 | ((r & 7) << 3));
    imm32(disp);
  }
  // mov [rsp+disp], rax
  void mov_rsp_rax(int32_t disp) {
    bytes({0x48, 0x89, 0x84, 0x24});
    imm32(disp);
  }
  // mov r, [base]   (base in r11)
  void mov_reg_mem_r11(Reg r) {
    byte(r >= 8 ? 0x4D : 0x49);
    byte(0x8B);
    byte(0x03 | ((r & 7) << 3));
  }
  void mov_mem_r11_reg(Reg r) {
    byte(r >= 8 ? 0x4D : 0x49);
    byte(0x89);
    byte(0x03 | ((r & 7) << 3));
  }
  // mov r, [r + disp] (used for the arg array; same reg as base)
  void mov_reg_own_disp(Reg r, int32_t disp) {
    byte(r >= 8 ? 0x4D : 0x48);
    byte(0x8B);
    byte(0x80 | ((r & 7) << 3) | (r & 7));
    imm32(disp);
  }

  void alu_rax_rcx(uint8_t opcode) {  // opcode C8-form: op rax, rcx
    bytes({0x48, opcode, 0xC8});
  }
  void add_rax_rcx() { alu_rax_rcx(0x01); }
  void sub_rax_rcx() { alu_rax_rcx(0x29); }
  void xor_rax_rcx() { alu_rax_rcx(0x31); }
  void cmp_rax_rcx() { alu_rax_rcx(0x39); }
  void imul_rax_rcx() { bytes({0x48, 0x0F, 0xAF, 0xC1}); }
  void cqo() { bytes({0x48, 0x99}); }
  void idiv_rcx() { bytes({0x48, 0xF7, 0xF9}); }
  void test_rax_rax() { bytes({0x48, 0x85, 0xC0}); }
  void setcc_rax(uint8_t cc) {  // setcc al; movzx eax, al
    bytes({0x0F, cc, 0xC0, 0x0F, 0xB6, 0xC0});
  }
  void cmovne_rax_rcx() { bytes({0x48, 0x0F, 0x45, 0xC1}); }
  void mov_rax_rdx() { bytes({0x48, 0x89, 0xD0}); }
  void mov_rdi_rsp() { bytes({0x48, 0x89, 0xE7}); }
  void mov_rsi_rsp() { bytes({0x48, 0x89, 0xE6}); }

  void movq_xmm0_rax() { bytes({0x66, 0x48, 0x0F, 0x6E, 0xC0}); }
  void movq_xmm1_rcx() { bytes({0x66, 0x48, 0x0F, 0x6E, 0xC9}); }
  void movq_rax_xmm0() { bytes({0x66, 0x48, 0x0F, 0x7E, 0xC0}); }
  void sse_xmm0_xmm1(uint8_t opcode) {  // addsd/subsd/mulsd/divsd
    bytes({0xF2, 0x0F, opcode, 0xC1});
  }
  void cvtsi2sd_xmm0_rax() { bytes({0xF2, 0x48, 0x0F, 0x2A, 0xC0}); }

  void push_rbp() { byte(0x55); }
  void mov_rbp_rsp() { bytes({0x48, 0x89, 0xE5}); }
  void sub_rsp(int32_t n) {
    bytes({0x48, 0x81, 0xEC});
    imm32(n);
  }
  void leave_ret() { bytes({0x48, 0x89, 0xEC, 0x5D, 0xC3}); }

  size_t jmp_rel32() {
    byte(0xE9);
    size_t at = pos();
    imm32(0);
    return at;
  }
  size_t jne_rel32() {
    bytes({0x0F, 0x85});
    size_t at = pos();
    imm32(0);
    return at;
  }
  size_t call_rel32() {
    byte(0xE8);
    size_t at = pos();
    imm32(0);
    return at;
  }
  void call_r11() { bytes({0x41, 0xFF, 0xD3}); }
};

class JitEngine final : public ExecEngine {
 public:
  JitEngine(ModulePtr module, const NativeRegistry& registry)
      : module_(std::move(module)) {
    if (!kJitSupported)
      throw EngineUnavailableError("JIT engine requires x86-64");
    globals_.assign(module_->globals.size(), 0);
    trap_ext_ = module_->extern_index(kTrapSymbol);
    natives_.resize(module_->externs.size(), nullptr);
    for (size_t i = 0; i < module_->externs.size(); ++i) {
      if (int(i) == trap_ext_) continue;
      const NativeCallable* nc = registry.find(module_->externs[i].name);
      if (!nc) throw UnresolvedSymbolError(module_->externs[i].name);
      natives_[i] = nc;
    }
    compile();
  }

  ~JitEngine() override {
    if (exec_mem_) munmap(exec_mem_, exec_len_);
  }

  JitEngine(const JitEngine&) = delete;
  JitEngine& operator=(const JitEngine&) = delete;

  Value call_function(std::string_view name,
                      std::span<const Value> args) override {
    auto it = fn_offset_.find(std::string(name));
    if (it == fn_offset_.end())
      throw Error("no function named '" + std::string(name) + "' in module");
    const Function* f = module_->find_function(name);
    if (args.size() != f->params.size())
      throw InputArityError("function '" + f->name + "' expects " +
                            std::to_string(f->params.size()) +
                            " input(s), got " + std::to_string(args.size()));
    uint64_t rawbuf[16];
    std::vector<uint64_t> spill;
    uint64_t* raw = rawbuf;
    if (args.size() > 16) {
      spill.resize(args.size());
      raw = spill.data();
    }
    for (size_t i = 0; i < args.size(); ++i) {
      bool want_int = f->params[i] == Type::I64;
      if (want_int != args[i].is_int())
        throw InputArityError("input " + std::to_string(i + 1) + " of '" +
                              f->name + "' has the wrong type");
      raw[i] = want_int ? uint64_t(args[i].as_int())
                        : std::bit_cast<uint64_t>(args[i].as_double());
    }
    if (depth_global_ >= 0) globals_[depth_global_] = 0;

    auto fn = reinterpret_cast<uint64_t (*)(uint64_t*)>(
        static_cast<uint8_t*>(exec_mem_) + it->second);
    state_.pending = nullptr;
    uint64_t out = 0;
    int jumped = setjmp(state_.env);
    if (jumped == 0) {
      out = fn(raw);
    } else if (jumped == 2) {
      std::rethrow_exception(state_.pending);
    } else {
      throw RecursionLimitError();
    }
    return f->ret == Type::I64
               ? Value::of_int(int64_t(out))
               : Value::of_double(std::bit_cast<double>(out));
  }

  const Module& module() const override { return *module_; }
  const char* kind_name() const override { return "jit"; }

 private:
  void compile();
  void compile_function(Asm& a, const Function& f,
                        std::vector<std::pair<size_t, int>>& call_fixups);

  ModulePtr module_;
  std::vector<uint64_t> globals_;
  std::vector<const NativeCallable*> natives_;
  int trap_ext_ = -1;
  int depth_global_ = -1;
  std::unordered_map<std::string, size_t> fn_offset_;
  std::vector<size_t> fn_index_offset_;
  void* exec_mem_ = nullptr;
  size_t exec_len_ = 0;
  JitState state_;
};

void JitEngine::compile_function(
    Asm& a, const Function& f,
    std::vector<std::pair<size_t, int>>& call_fixups) {
  // slot layout mirrors the interpreter: results then alloca storage
  std::unordered_map<const Instr*, int32_t> result_slot;
  std::unordered_map<const Instr*, int32_t> alloca_slot;
  int32_t next_slot = 0;
  size_t max_args = 0;
  for (const auto& bb : f.blocks) {
    for (const Instr* in : bb->instrs) {
      if (in->type != Type::Void) result_slot[in] = next_slot++;
      if (in->op == Op::Alloca) alloca_slot[in] = next_slot++;
      if (in->op == Op::Call) max_args = std::max(max_args, in->args.size());
    }
  }
  auto slot_disp = [](int32_t slot) { return -16 - 8 * slot; };

  int32_t frame = 8 + 8 * next_slot + 8 * int32_t(max_args);
  frame = (frame + 15) & ~15;

  a.push_rbp();
  a.mov_rbp_rsp();
  a.sub_rsp(frame);
  a.mov_rbp_reg(-8, RDI);  // incoming argument array

  // operand -> register
  auto load_operand = [&](Reg r, const Operand& o) {
    switch (o.kind) {
      case Operand::Kind::Instr:
        a.mov_reg_rbp(r, slot_disp(result_slot.at(o.instr)));
        break;
      case Operand::Kind::ConstI:
      case Operand::Kind::ConstF:
        a.mov_reg_imm64(r, uint64_t(o.bits));
        break;
      case Operand::Kind::Param:
        a.mov_reg_rbp(r, -8);
        a.mov_reg_own_disp(r, int32_t(o.index()) * 8);
        break;
      case Operand::Kind::Global:
        a.mov_reg_imm64(R11, uint64_t(uintptr_t(&globals_[o.index()])));
        a.mov_reg_mem_r11(r);
        break;
      default:
        throw CodegenError("jit: unexpected operand kind");
    }
  };
  auto store_result = [&](const Instr* in) {
    a.mov_rbp_reg(slot_disp(result_slot.at(in)), RAX);
  };

  std::unordered_map<const Block*, size_t> block_pos;
  std::vector<std::pair<size_t, const Block*>> branch_fixups;

  for (const auto& bb : f.blocks) {
    block_pos[bb.get()] = a.pos();
    for (const Instr* in : bb->instrs) {
      switch (in->op) {
        case Op::Alloca:
          break;  // static frame slot
        case Op::Load: {
          const Operand& p = in->args[0];
          if (p.kind == Operand::Kind::Global) {
            a.mov_reg_imm64(R11, uint64_t(uintptr_t(&globals_[p.index()])));
            a.mov_reg_mem_r11(RAX);
          } else {
            a.mov_reg_rbp(RAX, slot_disp(alloca_slot.at(p.instr)));
          }
          store_result(in);
          break;
        }
        case Op::Store: {
          load_operand(RAX, in->args[0]);
          const Operand& p = in->args[1];
          if (p.kind == Operand::Kind::Global) {
            a.mov_reg_imm64(R11, uint64_t(uintptr_t(&globals_[p.index()])));
            a.mov_mem_r11_reg(RAX);
          } else {
            a.mov_rbp_reg(slot_disp(alloca_slot.at(p.instr)), RAX);
          }
          break;
        }
        case Op::IAdd:
        case Op::ISub:
        case Op::IMul:
          load_operand(RAX, in->args[0]);
          load_operand(RCX, in->args[1]);
          if (in->op == Op::IAdd) a.add_rax_rcx();
          else if (in->op == Op::ISub) a.sub_rax_rcx();
          else a.imul_rax_rcx();
          store_result(in);
          break;
        case Op::SDiv:
        case Op::SRem:
          load_operand(RAX, in->args[0]);
          load_operand(RCX, in->args[1]);
          a.cqo();
          a.idiv_rcx();
          if (in->op == Op::SRem) a.mov_rax_rdx();
          store_result(in);
          break;
        case Op::FAdd:
        case Op::FSub:
        case Op::FMul:
        case Op::FDiv: {
          load_operand(RAX, in->args[0]);
          a.movq_xmm0_rax();
          load_operand(RCX, in->args[1]);
          a.movq_xmm1_rcx();
          uint8_t sse = in->op == Op::FAdd   ? 0x58
                        : in->op == Op::FSub ? 0x5C
                        : in->op == Op::FMul ? 0x59
                                             : 0x5E;
          a.sse_xmm0_xmm1(sse);
          a.movq_rax_xmm0();
          store_result(in);
          break;
        }
        case Op::FNeg:
          load_operand(RAX, in->args[0]);
          a.mov_reg_imm64(RCX, 0x8000000000000000ull);
          a.xor_rax_rcx();
          store_result(in);
          break;
        case Op::ICmpEq:
        case Op::ICmpNe:
        case Op::ICmpSgt: {
          load_operand(RAX, in->args[0]);
          load_operand(RCX, in->args[1]);
          a.cmp_rax_rcx();
          uint8_t cc = in->op == Op::ICmpEq   ? 0x94
                       : in->op == Op::ICmpNe ? 0x95
                                              : 0x9F;
          a.setcc_rax(cc);
          store_result(in);
          break;
        }
        case Op::Select:
          load_operand(RCX, in->args[1]);  // then-value
          load_operand(RDX, in->args[2]);  // else-value
          load_operand(RAX, in->args[0]);  // condition
          a.test_rax_rax();
          a.mov_rax_rdx();
          a.cmovne_rax_rcx();
          store_result(in);
          break;
        case Op::SIToFP:
          load_operand(RAX, in->args[0]);
          a.cvtsi2sd_xmm0_rax();
          a.movq_rax_xmm0();
          store_result(in);
          break;
        case Op::Call: {
          for (size_t i = 0; i < in->args.size(); ++i) {
            load_operand(RAX, in->args[i]);
            a.mov_rsp_rax(int32_t(i) * 8);
          }
          if (in->callee_fn >= 0) {
            a.mov_rdi_rsp();
            call_fixups.push_back({a.call_rel32(), in->callee_fn});
          } else if (in->callee_ext == trap_ext_) {
            a.mov_reg_imm64(RDI, uint64_t(uintptr_t(&state_)));
            a.mov_reg_imm64(R11, uint64_t(uintptr_t(&gpjit_jit_trap)));
            a.call_r11();
          } else {
            a.mov_rsi_rsp();
            a.mov_reg_imm64(
                RDI, uint64_t(uintptr_t(natives_[in->callee_ext])));
            a.mov_reg_imm64(RDX, uint64_t(uintptr_t(&state_)));
            a.mov_reg_imm64(R11, uint64_t(uintptr_t(&gpjit_native_bridge)));
            a.call_r11();
          }
          if (in->type != Type::Void) store_result(in);
          break;
        }
        case Op::Br:
          branch_fixups.push_back({a.jmp_rel32(), in->succ0});
          break;
        case Op::CondBr:
          load_operand(RAX, in->args[0]);
          a.test_rax_rax();
          branch_fixups.push_back({a.jne_rel32(), in->succ0});
          branch_fixups.push_back({a.jmp_rel32(), in->succ1});
          break;
        case Op::Ret:
          load_operand(RAX, in->args[0]);
          a.leave_ret();
          break;
      }
    }
  }

  for (auto& [at, target] : branch_fixups)
    a.patch32(at, int32_t(block_pos.at(target) - (at + 4)));
}

void JitEngine::compile() {
  depth_global_ = module_->global_index(kDepthGlobal);

  Asm a;
  std::vector<std::pair<size_t, int>> call_fixups;  // (rel32 pos, fn index)
  fn_index_offset_.resize(module_->functions.size());
  for (size_t i = 0; i < module_->functions.size(); ++i) {
    const Function& f = *module_->functions[i];
    size_t off = a.pos();
    fn_index_offset_[i] = off;
    fn_offset_[f.name] = off;
    compile_function(a, f, call_fixups);
  }
  for (auto& [at, fn_idx] : call_fixups)
    a.patch32(at, int32_t(fn_index_offset_[fn_idx] - (at + 4)));

  exec_len_ = (a.code.size() + 4095) & ~size_t(4095);
  exec_mem_ = mmap(nullptr, exec_len_, PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (exec_mem_ == MAP_FAILED) {
    exec_mem_ = nullptr;
    throw EngineUnavailableError("mmap for JIT code failed");
  }
  std::memcpy(exec_mem_, a.code.data(), a.code.size());
  if (mprotect(exec_mem_, exec_len_, PROT_READ | PROT_EXEC) != 0)
    throw EngineUnavailableError("mprotect(PROT_EXEC) failed");
}

}  // namespace

std::unique_ptr<ExecEngine> make_jit_engine(ModulePtr module,
                                            const NativeRegistry& registry) {
  return std::make_unique<JitEngine>(std::move(module), registry);
}

std::unique_ptr<ExecEngine> make_engine(ModulePtr module, EngineKind kind,
                                        const NativeRegistry& registry) {
  verify_or_throw(*module, "engine creation");
  return kind == EngineKind::Interpreter
             ? make_interp_engine(std::move(module), registry)
             : make_jit_engine(std::move(module), registry);
}

Value run_entry(ExecEngine& engine, std::span<const Value> inputs) {
  const Module& m = engine.module();
  if (m.find_function("gp_main"))
    return engine.call_function("gp_main", inputs);
  if (!inputs.empty())
    throw InputArityError(
        "program has no gp_main; the implicit entry takes no inputs");
  return engine.call_function(kEntryName, inputs);
}

}  // namespace gpjit::ir
