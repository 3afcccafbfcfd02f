#pragma once

#include <string>

#include "gpjit/ir.hpp"

namespace gpjit {

// Ordered flags for the five reference passes; -OPT configurations enable
// all of them, in this order.
struct PassSelection {
  bool basic_alias_analysis = false;
  bool instruction_combining = false;
  bool reassociate = false;
  bool gvn = false;
  bool cfg_simplification = false;

  static PassSelection all() { return {true, true, true, true, true}; }
  static PassSelection none() { return {}; }
  bool any() const {
    return basic_alias_analysis || instruction_combining || reassociate ||
           gvn || cfg_simplification;
  }
  std::string describe() const;
};

}  // namespace gpjit

namespace gpjit::ir {

// Runs the selected passes over every function, in the fixed order:
// basic alias analysis (enables memory-aware GVN / forwarding), instruction
// combining, reassociate, GVN, CFG simplification. The module re-verifies
// afterwards; failures raise OptimizeError. An empty selection leaves the
// module untouched.
void optimize(Module& m, const PassSelection& passes);

}  // namespace gpjit::ir
