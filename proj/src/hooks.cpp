#include "gpjit/hooks.hpp"

namespace gpjit::hooks {

Counters& counters() {
  static Counters instance;
  return instance;
}

}  // namespace gpjit::hooks
