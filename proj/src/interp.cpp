#include <cstring>
#include <unordered_map>

#include "gpjit/codegen.hpp"
#include "gpjit/engine.hpp"

namespace gpjit::ir {

namespace {

using arith::wrap_add;
using arith::wrap_mul;
using arith::wrap_sub;

// Flat register-machine form of one IR function. Every instruction result,
// alloca storage cell and constant gets a frame slot; operands become
// frame-relative indices resolved once, at engine construction.
enum class ROp : uint8_t {
  Nop,  // alloca: storage is static, the dispatch cost stays
  LoadLocal,
  LoadGlobal,
  StoreLocal,
  StoreGlobal,
  IAdd,
  ISub,
  IMul,
  SDiv,
  SRem,
  FAdd,
  FSub,
  FMul,
  FDiv,
  FNeg,
  ICmpEq,
  ICmpNe,
  ICmpSgt,
  Select,
  SIToFP,
  CallFn,
  CallExt,
  Jump,
  Branch,
  Return,
};

struct RInstr {
  ROp op;
  int32_t dst = -1;
  int32_t a = -1;
  int32_t b = -1;
  int32_t c = -1;  // select: else-value; branch: else-pc
  int32_t aux = -1;  // call: args offset in arg_pool; callee index
  int32_t argc = 0;
};

struct FlatFn {
  std::string name;
  std::vector<Type> params;
  Type ret = Type::I64;
  uint32_t frame_size = 0;
  std::vector<RInstr> code;
  std::vector<uint64_t> const_pool;  // copied into the frame tail on entry
  uint32_t const_base = 0;
  std::vector<int32_t> arg_pool;  // argument slot lists for calls
};

class InterpEngine final : public ExecEngine {
 public:
  InterpEngine(ModulePtr module, const NativeRegistry& registry)
      : module_(std::move(module)) {
    globals_.assign(module_->globals.size(), 0);
    trap_ext_ = module_->extern_index(kTrapSymbol);
    natives_.resize(module_->externs.size(), nullptr);
    for (size_t i = 0; i < module_->externs.size(); ++i) {
      const auto& e = module_->externs[i];
      if (int(i) == trap_ext_) continue;
      const NativeCallable* nc = registry.find(e.name);
      if (!nc) throw UnresolvedSymbolError(e.name);
      natives_[i] = nc;
    }
    fns_.reserve(module_->functions.size());
    for (const auto& f : module_->functions) flatten(*f);
  }

  Value call_function(std::string_view name,
                      std::span<const Value> args) override;

  const Module& module() const override { return *module_; }
  const char* kind_name() const override { return "interpreter"; }

 private:
  void flatten(const Function& f);
  uint64_t execute(const FlatFn& top, const uint64_t* args);

  ModulePtr module_;
  std::vector<FlatFn> fns_;
  std::unordered_map<std::string, int> fn_by_name_;
  std::vector<uint64_t> globals_;
  std::vector<const NativeCallable*> natives_;
  int trap_ext_ = -1;
  std::vector<uint64_t> stack_;
};

void InterpEngine::flatten(const Function& f) {
  FlatFn out;
  out.name = f.name;
  out.params = f.params;
  out.ret = f.ret;

  // slot layout: [params][instruction results + alloca storage][constants]
  uint32_t next_slot = uint32_t(f.params.size());
  std::unordered_map<const Instr*, int32_t> result_slot;
  std::unordered_map<const Instr*, int32_t> alloca_slot;
  for (const auto& bb : f.blocks) {
    for (const Instr* in : bb->instrs) {
      if (in->type != Type::Void) result_slot[in] = int32_t(next_slot++);
      if (in->op == Op::Alloca) alloca_slot[in] = int32_t(next_slot++);
    }
  }
  std::map<uint64_t, int32_t> const_slots;
  auto operand_slot = [&](const Operand& o) -> int32_t {
    switch (o.kind) {
      case Operand::Kind::Instr:
        return result_slot.at(o.instr);
      case Operand::Kind::Param:
        return int32_t(o.index());
      case Operand::Kind::ConstI:
      case Operand::Kind::ConstF: {
        uint64_t bits = uint64_t(o.bits);
        auto it = const_slots.find(bits);
        if (it != const_slots.end()) return it->second;
        // marker bit is patched to a frame-relative index once layout is known
        int32_t marked = int32_t(const_slots.size()) | (1 << 30);
        const_slots.emplace(bits, marked);
        out.const_pool.push_back(bits);
        return marked;
      }
      default:
        throw CodegenError("interpreter: unexpected operand kind");
    }
  };

  // first pass: instruction order -> pc, for branch targets
  std::unordered_map<const Block*, int32_t> block_pc;
  int32_t pc = 0;
  for (const auto& bb : f.blocks) {
    block_pc[bb.get()] = pc;
    pc += int32_t(bb->instrs.size());
  }

  for (const auto& bb : f.blocks) {
    for (const Instr* in : bb->instrs) {
      RInstr r{};
      r.dst = in->type != Type::Void ? result_slot.at(in) : -1;
      switch (in->op) {
        case Op::Alloca:
          r.op = ROp::Nop;
          break;
        case Op::Load: {
          const Operand& p = in->args[0];
          if (p.kind == Operand::Kind::Global) {
            r.op = ROp::LoadGlobal;
            r.a = int32_t(p.index());
          } else {
            r.op = ROp::LoadLocal;
            r.a = alloca_slot.at(p.instr);
          }
          break;
        }
        case Op::Store: {
          const Operand& p = in->args[1];
          r.a = operand_slot(in->args[0]);
          if (p.kind == Operand::Kind::Global) {
            r.op = ROp::StoreGlobal;
            r.b = int32_t(p.index());
          } else {
            r.op = ROp::StoreLocal;
            r.b = alloca_slot.at(p.instr);
          }
          break;
        }
        case Op::IAdd: r.op = ROp::IAdd; goto binop;
        case Op::ISub: r.op = ROp::ISub; goto binop;
        case Op::IMul: r.op = ROp::IMul; goto binop;
        case Op::SDiv: r.op = ROp::SDiv; goto binop;
        case Op::SRem: r.op = ROp::SRem; goto binop;
        case Op::FAdd: r.op = ROp::FAdd; goto binop;
        case Op::FSub: r.op = ROp::FSub; goto binop;
        case Op::FMul: r.op = ROp::FMul; goto binop;
        case Op::FDiv: r.op = ROp::FDiv; goto binop;
        case Op::ICmpEq: r.op = ROp::ICmpEq; goto binop;
        case Op::ICmpNe: r.op = ROp::ICmpNe; goto binop;
        case Op::ICmpSgt: r.op = ROp::ICmpSgt; goto binop;
        binop:
          r.a = operand_slot(in->args[0]);
          r.b = operand_slot(in->args[1]);
          break;
        case Op::FNeg:
          r.op = ROp::FNeg;
          r.a = operand_slot(in->args[0]);
          break;
        case Op::SIToFP:
          r.op = ROp::SIToFP;
          r.a = operand_slot(in->args[0]);
          break;
        case Op::Select:
          r.op = ROp::Select;
          r.a = operand_slot(in->args[0]);
          r.b = operand_slot(in->args[1]);
          r.c = operand_slot(in->args[2]);
          break;
        case Op::Call: {
          r.op = in->callee_fn >= 0 ? ROp::CallFn : ROp::CallExt;
          r.aux = in->callee_fn >= 0 ? in->callee_fn : in->callee_ext;
          r.b = int32_t(out.arg_pool.size());
          r.argc = int32_t(in->args.size());
          for (const Operand& o : in->args)
            out.arg_pool.push_back(operand_slot(o));
          break;
        }
        case Op::Br:
          r.op = ROp::Jump;
          r.a = block_pc.at(in->succ0);
          break;
        case Op::CondBr:
          r.op = ROp::Branch;
          r.a = operand_slot(in->args[0]);
          r.b = block_pc.at(in->succ0);
          r.c = block_pc.at(in->succ1);
          break;
        case Op::Ret:
          r.op = ROp::Return;
          r.a = operand_slot(in->args[0]);
          break;
      }
      out.code.push_back(r);
    }
  }

  out.const_base = next_slot;
  out.frame_size = next_slot + uint32_t(out.const_pool.size());
  // patch constant slot markers to frame-relative indices
  auto patch = [&](int32_t& s) {
    if (s >= 0 && (s & (1 << 30))) s = int32_t(out.const_base) + (s & ~(1 << 30));
  };
  for (RInstr& r : out.code) {
    patch(r.a);
    if (r.op != ROp::StoreGlobal && r.op != ROp::Branch) patch(r.b);
    if (r.op == ROp::Select) patch(r.c);
  }
  for (int32_t& s : out.arg_pool) patch(s);

  fn_by_name_[out.name] = int(fns_.size());
  fns_.push_back(std::move(out));
}

uint64_t InterpEngine::execute(const FlatFn& top, const uint64_t* args) {
  struct Frame {
    const FlatFn* fn;
    int32_t pc;
    uint32_t base;
    int32_t ret_dst;  // slot in caller frame
  };

  stack_.clear();
  std::vector<Frame> frames;

  auto push_frame = [&](const FlatFn& fn, int32_t ret_dst) -> uint64_t* {
    uint32_t base = uint32_t(stack_.size());
    stack_.resize(base + fn.frame_size);
    uint64_t* fp = stack_.data() + base;
    if (!fn.const_pool.empty())
      std::memcpy(fp + fn.const_base, fn.const_pool.data(),
                  fn.const_pool.size() * sizeof(uint64_t));
    frames.push_back({&fn, 0, base, ret_dst});
    return fp;
  };

  uint64_t* fp = push_frame(top, -1);
  for (size_t i = 0; i < top.params.size(); ++i) fp[i] = args[i];

  uint64_t result = 0;
  auto f64 = [](uint64_t b) { return std::bit_cast<double>(b); };
  auto bits = [](double d) { return std::bit_cast<uint64_t>(d); };

  while (!frames.empty()) {
    Frame& fr = frames.back();
    const RInstr& r = fr.fn->code[fr.pc++];
    fp = stack_.data() + fr.base;
    switch (r.op) {
      case ROp::Nop:
        break;
      case ROp::LoadLocal:
        fp[r.dst] = fp[r.a];
        break;
      case ROp::LoadGlobal:
        fp[r.dst] = globals_[r.a];
        break;
      case ROp::StoreLocal:
        fp[r.b] = fp[r.a];
        break;
      case ROp::StoreGlobal:
        globals_[r.b] = fp[r.a];
        break;
      case ROp::IAdd:
        fp[r.dst] = uint64_t(wrap_add(int64_t(fp[r.a]), int64_t(fp[r.b])));
        break;
      case ROp::ISub:
        fp[r.dst] = uint64_t(wrap_sub(int64_t(fp[r.a]), int64_t(fp[r.b])));
        break;
      case ROp::IMul:
        fp[r.dst] = uint64_t(wrap_mul(int64_t(fp[r.a]), int64_t(fp[r.b])));
        break;
      case ROp::SDiv: {
        // codegen guards make the raw cases unreachable; stay total anyway
        int64_t a = int64_t(fp[r.a]), b = int64_t(fp[r.b]);
        fp[r.dst] = uint64_t(arith::prot_div(a, b));
        break;
      }
      case ROp::SRem: {
        int64_t a = int64_t(fp[r.a]), b = int64_t(fp[r.b]);
        fp[r.dst] = uint64_t(arith::prot_rem(a, b));
        break;
      }
      case ROp::FAdd:
        fp[r.dst] = bits(f64(fp[r.a]) + f64(fp[r.b]));
        break;
      case ROp::FSub:
        fp[r.dst] = bits(f64(fp[r.a]) - f64(fp[r.b]));
        break;
      case ROp::FMul:
        fp[r.dst] = bits(f64(fp[r.a]) * f64(fp[r.b]));
        break;
      case ROp::FDiv:
        fp[r.dst] = bits(f64(fp[r.a]) / f64(fp[r.b]));
        break;
      case ROp::FNeg:
        fp[r.dst] = fp[r.a] ^ 0x8000000000000000ull;
        break;
      case ROp::ICmpEq:
        fp[r.dst] = fp[r.a] == fp[r.b] ? 1 : 0;
        break;
      case ROp::ICmpNe:
        fp[r.dst] = fp[r.a] != fp[r.b] ? 1 : 0;
        break;
      case ROp::ICmpSgt:
        fp[r.dst] = int64_t(fp[r.a]) > int64_t(fp[r.b]) ? 1 : 0;
        break;
      case ROp::Select:
        fp[r.dst] = fp[r.a] != 0 ? fp[r.b] : fp[r.c];
        break;
      case ROp::SIToFP:
        fp[r.dst] = bits(double(int64_t(fp[r.a])));
        break;
      case ROp::Jump:
        fr.pc = r.a;
        break;
      case ROp::Branch:
        fr.pc = fp[r.a] != 0 ? r.b : r.c;
        break;
      case ROp::Return: {
        uint64_t v = fp[r.a];
        int32_t ret_dst = fr.ret_dst;
        uint32_t base = fr.base;
        frames.pop_back();
        stack_.resize(base);
        if (frames.empty()) {
          result = v;
        } else if (ret_dst >= 0) {
          stack_[frames.back().base + ret_dst] = v;
        }
        break;
      }
      case ROp::CallFn: {
        const FlatFn& callee = fns_[r.aux];
        // read args before push_frame; resize may move the stack
        uint64_t argbuf[16];
        std::vector<uint64_t> argspill;
        uint64_t* av = argbuf;
        if (r.argc > 16) {
          argspill.resize(r.argc);
          av = argspill.data();
        }
        for (int32_t i = 0; i < r.argc; ++i)
          av[i] = fp[fr.fn->arg_pool[r.b + i]];
        uint64_t* nfp = push_frame(callee, r.dst);
        for (int32_t i = 0; i < r.argc; ++i) nfp[i] = av[i];
        break;
      }
      case ROp::CallExt: {
        if (r.aux == trap_ext_) {
          stack_.clear();
          throw RecursionLimitError();
        }
        const NativeCallable* nc = natives_[r.aux];
        Value vargs[16];
        std::vector<Value> vspill;
        Value* va = vargs;
        if (r.argc > 16) {
          vspill.resize(r.argc);
          va = vspill.data();
        }
        for (int32_t i = 0; i < r.argc; ++i) {
          uint64_t raw = fp[fr.fn->arg_pool[r.b + i]];
          va[i] = nc->sig.params[i] == ast::TypeTag::Int
                      ? Value::of_int(int64_t(raw))
                      : Value::of_double(std::bit_cast<double>(raw));
        }
        Value out = nc->fn(std::span<const Value>(va, size_t(r.argc)));
        if (out.tag() != nc->sig.ret)
          throw Error("native '" + nc->name +
                      "' returned a value of the wrong type");
        if (r.dst >= 0)
          fp[r.dst] = out.is_int() ? uint64_t(out.as_int())
                                   : std::bit_cast<uint64_t>(out.as_double());
        break;
      }
    }
  }
  return result;
}

Value InterpEngine::call_function(std::string_view name,
                                  std::span<const Value> args) {
  auto it = fn_by_name_.find(std::string(name));
  if (it == fn_by_name_.end())
    throw Error("no function named '" + std::string(name) + "' in module");
  const FlatFn& fn = fns_[it->second];
  if (args.size() != fn.params.size())
    throw InputArityError("function '" + fn.name + "' expects " +
                          std::to_string(fn.params.size()) +
                          " input(s), got " + std::to_string(args.size()));
  std::vector<uint64_t> raw(args.size());
  for (size_t i = 0; i < args.size(); ++i) {
    bool want_int = fn.params[i] == Type::I64;
    if (want_int != args[i].is_int())
      throw InputArityError("input " + std::to_string(i + 1) + " of '" +
                            fn.name + "' has the wrong type");
    raw[i] = want_int ? uint64_t(args[i].as_int())
                      : std::bit_cast<uint64_t>(args[i].as_double());
  }
  // reset the call-depth budget for this run
  int depth_idx = module_->global_index(kDepthGlobal);
  if (depth_idx >= 0) globals_[depth_idx] = 0;
  uint64_t out = execute(fn, raw.data());
  return fn.ret == Type::I64
             ? Value::of_int(int64_t(out))
             : Value::of_double(std::bit_cast<double>(out));
}

}  // namespace

std::unique_ptr<ExecEngine> make_interp_engine(ModulePtr module,
                                               const NativeRegistry& registry) {
  return std::make_unique<InterpEngine>(std::move(module), registry);
}

}  // namespace gpjit::ir
