#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gpjit/errors.hpp"

namespace gpjit::ast {

enum class TypeTag : uint8_t { Int, Double };

const char* type_name(TypeTag tag);

enum class BinOp : uint8_t { Add, Sub, Mul, Div, Mod };

const char* op_symbol(BinOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct IntLiteral {
  int64_t value = 0;
};

struct DoubleLiteral {
  double value = 0.0;
};

struct Identifier {
  std::string name;
};

struct BinaryOp {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct UnaryNeg {
  ExprPtr operand;
};

struct Call {
  std::string callee;
  std::vector<ExprPtr> args;
};

struct Assignment {
  std::string target;
  ExprPtr value;
};

struct Expr {
  std::variant<IntLiteral, DoubleLiteral, Identifier, BinaryOp, UnaryNeg, Call,
               Assignment>
      node;
  SrcLoc loc;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct ExprStmt {
  ExprPtr expr;
};

struct VarDecl {
  TypeTag tag;
  std::string name;
  ExprPtr init;
};

struct Param {
  TypeTag tag;
  std::string name;
};

struct FuncDecl {
  TypeTag return_tag;
  std::string name;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
};

struct Return {
  ExprPtr expr;
};

struct Stmt {
  std::variant<ExprStmt, VarDecl, FuncDecl, Return> node;
  SrcLoc loc;
};

struct Program {
  std::vector<StmtPtr> top_level;
};

// Convenience constructors, used by the parser, the GP engine, and tests.
ExprPtr make_int(int64_t value, SrcLoc loc = {});
ExprPtr make_double(double value, SrcLoc loc = {});
ExprPtr make_ident(std::string name, SrcLoc loc = {});
ExprPtr make_binop(BinOp op, ExprPtr lhs, ExprPtr rhs, SrcLoc loc = {});
ExprPtr make_neg(ExprPtr operand, SrcLoc loc = {});
ExprPtr make_call(std::string callee, std::vector<ExprPtr> args, SrcLoc loc = {});
ExprPtr make_assign(std::string target, ExprPtr value, SrcLoc loc = {});

struct Metrics {
  int size = 0;   // number of Expr/Stmt nodes
  int depth = 0;  // max root-to-leaf node count
};

Metrics metrics(const Expr& e);
Metrics metrics(const Stmt& s);
Metrics metrics(const Program& p);

ExprPtr clone(const Expr& e);
StmtPtr clone(const Stmt& s);
Program clone(const Program& p);

bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Stmt& a, const Stmt& b);
bool structurally_equal(const Program& a, const Program& b);

// Pre-order addressing over Expr nodes; root is index 0.
// Throws std::out_of_range for k outside [0, metrics(root).size).
const Expr& select_subtree(const Expr& root, int k);

// Returns a new tree where the k-th pre-order node is a clone of `replacement`.
// Neither input is modified.
ExprPtr replace_subtree(const Expr& root, int k, const Expr& replacement);

// Depth (1-based node count from the root) of the k-th pre-order node.
int subtree_depth_at(const Expr& root, int k);

std::string to_dot(const Program& p);

// Shortest fixed-notation decimal that round-trips to exactly this double;
// always contains a '.', never an exponent. Used by the unparser and DOT.
std::string double_literal_text(double v);

struct FnSig {
  std::vector<TypeTag> params;
  TypeTag ret;
};

// Extern (native) signatures visible to the type checker; keyed by name.
using ExternSigs = std::map<std::string, FnSig>;

struct TypedProgram {
  Program program;
  std::unordered_map<const Expr*, TypeTag> tags;
  TypeTag entry_tag = TypeTag::Int;
  // Top-level functions by name, pointing into `program`.
  std::unordered_map<std::string, const FuncDecl*> functions;
  ExternSigs externs;

  TypeTag tag_of(const Expr& e) const { return tags.at(&e); }
};

// Tags every expression, resolves identifiers and calls, enforces the
// promotion rules (Int widens to Double, never the reverse) and `%` on Int
// only. Collects as many diagnostics as possible and throws TypeError if any.
// The returned TypedProgram owns a clone of `p`.
TypedProgram type_check(const Program& p, const ExternSigs& externs = {});

}  // namespace gpjit::ast
