#include "gpjit/value.hpp"

#include <charconv>

namespace gpjit {

std::string Value::str() const {
  if (is_int()) return "int:" + std::to_string(as_int());
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, as_double());
  return "double:" + std::string(buf, end);
}

}  // namespace gpjit
