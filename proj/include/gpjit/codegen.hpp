#pragma once

#include "gpjit/ast.hpp"
#include "gpjit/ir.hpp"
#include "gpjit/registry.hpp"

namespace gpjit::ir {

// Reserved symbol names used by the lowering.
inline constexpr const char* kEntryName = "__entry";
inline constexpr const char* kDepthGlobal = "__gp_depth";
inline constexpr const char* kTrapSymbol = "__gp_trap_recursion";

// Lowers a type-checked program to IR, one function per FuncDecl plus the
// implicit entry. Every function entry increments the call-depth global and
// branches to a trap call when the limit is exceeded; every return
// decrements it. Int / and % lower to a compare+select guarded sequence.
// The returned module passes verification.
ModulePtr codegen_program(const ast::TypedProgram& program,
                          const NativeRegistry& registry);

}  // namespace gpjit::ir
