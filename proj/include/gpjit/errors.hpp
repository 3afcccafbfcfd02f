#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gpjit {

// 1-based source position; line 0 means "unknown" (synthesized nodes).
struct SrcLoc {
  int line = 0;
  int column = 0;
  bool known() const { return line > 0; }
};

class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg, SrcLoc loc = {})
      : std::runtime_error(std::move(msg)), loc_(loc) {}
  SrcLoc loc() const { return loc_; }

 private:
  SrcLoc loc_;
};

class LexError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::string msg, SrcLoc loc, std::vector<std::string> expected)
      : Error(std::move(msg), loc), expected_(std::move(expected)) {}
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::vector<std::string> expected_;
};

enum class TypeDiagKind {
  UnknownIdentifier,
  UnknownFunction,
  ArityMismatch,
  TypeMismatch,
  DuplicateDefinition,
};

struct TypeDiag {
  TypeDiagKind kind;
  std::string name;  // offending identifier/function name, may be empty
  std::string message;
  SrcLoc loc;
};

class TypeError : public Error {
 public:
  TypeError(std::string msg, std::vector<TypeDiag> diags)
      : Error(std::move(msg), diags.empty() ? SrcLoc{} : diags.front().loc),
        diags_(std::move(diags)) {}
  const std::vector<TypeDiag>& diagnostics() const { return diags_; }

 private:
  std::vector<TypeDiag> diags_;
};

class CodegenError : public Error {
 public:
  using Error::Error;
};

class OptimizeError : public Error {
 public:
  using Error::Error;
};

class UnresolvedSymbolError : public Error {
 public:
  explicit UnresolvedSymbolError(std::string symbol)
      : Error("unresolved extern symbol: " + symbol), symbol_(std::move(symbol)) {}
  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

class EngineUnavailableError : public Error {
 public:
  using Error::Error;
};

class DuplicateNativeError : public Error {
 public:
  using Error::Error;
};

class InvalidSignatureError : public Error {
 public:
  using Error::Error;
};

class InputArityError : public Error {
 public:
  using Error::Error;
};

class RecursionLimitError : public Error {
 public:
  RecursionLimitError() : Error("call depth limit exceeded") {}
};

class BenchError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Call-depth budget shared by every backend; the language has no loops, so
// runaway recursion is the only nontermination channel.
inline constexpr int64_t kCallDepthLimit = 10000;

}  // namespace gpjit
