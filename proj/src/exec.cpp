#include "gpjit/exec.hpp"

#include "gpjit/codegen.hpp"
#include "gpjit/direct.hpp"
#include "gpjit/engine.hpp"
#include "gpjit/hooks.hpp"

namespace gpjit {

const std::array<ExecConfig, 5>& ExecConfig::all() {
  static const std::array<ExecConfig, 5> configs = {
      ExecConfig{ConfigName::ALG}, ExecConfig{ConfigName::INT},
      ExecConfig{ConfigName::INT_OPT}, ExecConfig{ConfigName::JIT},
      ExecConfig{ConfigName::JIT_OPT}};
  return configs;
}

ExecConfig ExecConfig::from_name(std::string_view name) {
  for (const ExecConfig& c : all())
    if (name == c.str()) return c;
  throw Error("unknown configuration '" + std::string(name) +
              "' (expected ALG, INT, INT-OPT, JIT or JIT-OPT)");
}

namespace {

class IrExecutor final : public Executor {
 public:
  IrExecutor(std::unique_ptr<ir::ExecEngine> engine)
      : engine_(std::move(engine)) {}

  Value run(std::span<const Value> inputs) override {
    return ir::run_entry(*engine_, inputs);
  }
  const char* backend_name() const override { return engine_->kind_name(); }

 private:
  std::unique_ptr<ir::ExecEngine> engine_;
};

}  // namespace

std::unique_ptr<Executor> make_executor(const ExecConfig& config,
                                        const ast::TypedProgram& program,
                                        const NativeRegistry& registry) {
  hooks::counters().executor_constructions.fetch_add(
      1, std::memory_order_relaxed);
  if (config.engine() == ExecConfig::Engine::Direct)
    return direct_exec::prepare_direct(program, registry);

  ir::ModulePtr module = ir::codegen_program(program, registry);
  if (config.optimize()) ir::optimize(*module, config.passes());
  auto kind = config.engine() == ExecConfig::Engine::Interp
                  ? ir::EngineKind::Interpreter
                  : ir::EngineKind::Jit;
  return std::make_unique<IrExecutor>(
      ir::make_engine(std::move(module), kind, registry));
}

}  // namespace gpjit
