#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include "gpjit/exec.hpp"

namespace gpjit::direct_exec {

// Scope frame mapping names to values, chained to the enclosing scope.
// Lookup walks the parent chain; a call's root block has no parent chain
// into the caller.
struct ContextBlock {
  std::unordered_map<std::string, Value> slots;
  ContextBlock* parent = nullptr;

  Value* lookup(const std::string& name) {
    for (ContextBlock* b = this; b; b = b->parent) {
      auto it = b->slots.find(name);
      if (it != b->slots.end()) return &it->second;
    }
    return nullptr;
  }
};

// The ALG baseline: no translation step, the tree runs as it is.
class DirectExecutor final : public Executor {
 public:
  DirectExecutor(const ast::TypedProgram& program,
                 const NativeRegistry& registry);

  Value run(std::span<const Value> inputs) override;
  const char* backend_name() const override { return "direct"; }

 private:
  Value eval_expr(const ast::Expr& e, ContextBlock& ctx);
  // returns the value of an executed Return, if any
  std::optional<Value> exec_stmt(const ast::Stmt& s, ContextBlock& ctx);
  Value call_decl(const ast::FuncDecl& f, std::span<const Value> args);

  const ast::TypedProgram& program_;
  const NativeRegistry& registry_;
  const ast::FuncDecl* gp_main_ = nullptr;
  int64_t depth_ = 0;
};

std::unique_ptr<DirectExecutor> prepare_direct(
    const ast::TypedProgram& program, const NativeRegistry& registry);

}  // namespace gpjit::direct_exec
