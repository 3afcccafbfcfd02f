#pragma once

#include <array>
#include <memory>
#include <span>
#include <string_view>

#include "gpjit/ast.hpp"
#include "gpjit/passes.hpp"
#include "gpjit/registry.hpp"
#include "gpjit/value.hpp"

namespace gpjit {

// The five benchmark configurations. ALG walks the tree directly; INT*/JIT*
// translate to IR first and run it interpreted or natively; -OPT runs the
// full five-pass pipeline between codegen and engine creation.
enum class ConfigName { ALG, INT, INT_OPT, JIT, JIT_OPT };

struct ExecConfig {
  ConfigName name = ConfigName::ALG;

  enum class Engine { Direct, Interp, Jit };
  Engine engine() const {
    switch (name) {
      case ConfigName::ALG: return Engine::Direct;
      case ConfigName::INT:
      case ConfigName::INT_OPT: return Engine::Interp;
      default: return Engine::Jit;
    }
  }
  bool optimize() const {
    return name == ConfigName::INT_OPT || name == ConfigName::JIT_OPT;
  }
  PassSelection passes() const {
    return optimize() ? PassSelection::all() : PassSelection::none();
  }
  const char* str() const {
    switch (name) {
      case ConfigName::ALG: return "ALG";
      case ConfigName::INT: return "INT";
      case ConfigName::INT_OPT: return "INT-OPT";
      case ConfigName::JIT: return "JIT";
      case ConfigName::JIT_OPT: return "JIT-OPT";
    }
    return "?";
  }

  static const std::array<ExecConfig, 5>& all();
  // Accepts the table names: ALG, INT, INT-OPT, JIT, JIT-OPT. Throws Error.
  static ExecConfig from_name(std::string_view name);
};

// One prepared program under one configuration. Preparation (translation,
// optimization, engine creation) happens in make_executor; run is repeatable
// any number of times and returns equal Values for equal inputs.
//
// If the program defines gp_main, run(inputs) calls it (arity and tags must
// match); otherwise run({}) invokes the implicit entry and non-empty inputs
// raise InputArityError.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual Value run(std::span<const Value> inputs) = 0;
  virtual const char* backend_name() const = 0;
};

// The typed program and the registry must outlive the executor.
std::unique_ptr<Executor> make_executor(const ExecConfig& config,
                                        const ast::TypedProgram& program,
                                        const NativeRegistry& registry);

}  // namespace gpjit
