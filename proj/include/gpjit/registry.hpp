#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "gpjit/ast.hpp"
#include "gpjit/value.hpp"

namespace gpjit {

// One registered host function. Entries have stable addresses for the
// lifetime of the registry; the JIT bakes them into generated code.
struct NativeCallable {
  std::string name;
  ast::FnSig sig;
  std::function<Value(std::span<const Value>)> fn;
};

// Look-up table mapping function names to host callables. Immutable once
// executors have been created from it; shareable across threads after setup.
class NativeRegistry {
 public:
  using HostFn = std::function<Value(std::span<const Value>)>;

  // Throws DuplicateNativeError / InvalidSignatureError.
  void register_native(std::string name, std::vector<ast::TypeTag> param_tags,
                       ast::TypeTag return_tag, HostFn fn);

  const NativeCallable* find(std::string_view name) const;
  ast::ExternSigs extern_sigs() const;
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::unique_ptr<NativeCallable>, std::less<>> entries_;
};

}  // namespace gpjit
