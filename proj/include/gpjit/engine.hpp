#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "gpjit/ir.hpp"
#include "gpjit/registry.hpp"
#include "gpjit/value.hpp"

namespace gpjit::ir {

enum class EngineKind { Interpreter, Jit };

// Executes a verified module. Owns the module; extern symbols resolve through
// the registry's lookup table at construction. Single-owner: movable between
// threads, never shared.
class ExecEngine {
 public:
  virtual ~ExecEngine() = default;
  virtual Value call_function(std::string_view name,
                              std::span<const Value> args) = 0;
  virtual const Module& module() const = 0;
  virtual const char* kind_name() const = 0;
};

// For Jit, native code for every function is materialized here so that run
// cost excludes compilation. Throws UnresolvedSymbolError when the module
// declares an extern absent from the registry, EngineUnavailableError when
// the host cannot provide the kind.
std::unique_ptr<ExecEngine> make_engine(ModulePtr module, EngineKind kind,
                                        const NativeRegistry& registry);

// Invokes gp_main with `inputs` when the module defines it, otherwise the
// implicit entry (inputs must then be empty). Repeatable without
// re-translation. Throws InputArityError / RecursionLimitError.
Value run_entry(ExecEngine& engine, std::span<const Value> inputs);

std::unique_ptr<ExecEngine> make_interp_engine(ModulePtr module,
                                               const NativeRegistry& registry);
std::unique_ptr<ExecEngine> make_jit_engine(ModulePtr module,
                                            const NativeRegistry& registry);

}  // namespace gpjit::ir
