#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "gpjit/ast.hpp"

namespace gpjit {

// Tagged runtime scalar shared by every backend.
class Value {
 public:
  Value() : v_(int64_t{0}) {}
  static Value of_int(int64_t i) { return Value(i); }
  static Value of_double(double d) { return Value(d); }

  bool is_int() const { return std::holds_alternative<int64_t>(v_); }
  bool is_double() const { return std::holds_alternative<double>(v_); }
  ast::TypeTag tag() const {
    return is_int() ? ast::TypeTag::Int : ast::TypeTag::Double;
  }

  int64_t as_int() const { return std::get<int64_t>(v_); }
  double as_double() const { return std::get<double>(v_); }

  // Value under implicit Int -> Double promotion.
  double to_double() const { return is_int() ? double(as_int()) : as_double(); }

  bool operator==(const Value& o) const { return v_ == o.v_; }

  std::string str() const;  // "int:<v>" / "double:<v>", CLI output format

 private:
  explicit Value(int64_t i) : v_(i) {}
  explicit Value(double d) : v_(d) {}
  std::variant<int64_t, double> v_;
};

namespace arith {

// Two's-complement wrapping arithmetic; every backend produces these bits.
inline int64_t wrap_add(int64_t a, int64_t b) {
  return int64_t(uint64_t(a) + uint64_t(b));
}
inline int64_t wrap_sub(int64_t a, int64_t b) {
  return int64_t(uint64_t(a) - uint64_t(b));
}
inline int64_t wrap_mul(int64_t a, int64_t b) {
  return int64_t(uint64_t(a) * uint64_t(b));
}
inline int64_t wrap_neg(int64_t a) { return int64_t(~uint64_t(a) + 1); }

// Protected division: x/0 == 0, and INT64_MIN/-1 wraps instead of trapping.
inline int64_t prot_div(int64_t a, int64_t b) {
  if (b == 0) return 0;
  if (a == INT64_MIN && b == -1) return INT64_MIN;
  return a / b;
}
inline int64_t prot_rem(int64_t a, int64_t b) {
  if (b == 0) return 0;
  if (a == INT64_MIN && b == -1) return 0;
  return a % b;
}

}  // namespace arith
}  // namespace gpjit
