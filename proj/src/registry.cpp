#include "gpjit/registry.hpp"

namespace gpjit {

void NativeRegistry::register_native(std::string name,
                                     std::vector<ast::TypeTag> param_tags,
                                     ast::TypeTag return_tag, HostFn fn) {
  if (name.empty() || name.starts_with("__"))
    throw InvalidSignatureError("invalid native name: '" + name +
                                "' (empty or reserved prefix)");
  if (!fn) throw InvalidSignatureError("native '" + name + "' has no callable");
  if (entries_.count(name))
    throw DuplicateNativeError("native '" + name + "' already registered");
  auto entry = std::make_unique<NativeCallable>();
  entry->name = name;
  entry->sig = ast::FnSig{std::move(param_tags), return_tag};
  entry->fn = std::move(fn);
  entries_.emplace(std::move(name), std::move(entry));
}

const NativeCallable* NativeRegistry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.get();
}

ast::ExternSigs NativeRegistry::extern_sigs() const {
  ast::ExternSigs out;
  for (const auto& [name, entry] : entries_) out.emplace(name, entry->sig);
  return out;
}

}  // namespace gpjit
