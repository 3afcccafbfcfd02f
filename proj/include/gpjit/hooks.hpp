#pragma once

#include <atomic>
#include <cstdint>

namespace gpjit::hooks {

// Always-on instrumentation counters. The benchmark harness snapshots these
// to prove the Fig.-2 loop structure: parsing happens once per benchmark and
// never inside a timed region; one executor is built per outer repetition.
struct Counters {
  std::atomic<uint64_t> parse_invocations{0};
  std::atomic<uint64_t> executor_constructions{0};

  void reset() {
    parse_invocations.store(0, std::memory_order_relaxed);
    executor_constructions.store(0, std::memory_order_relaxed);
  }
};

Counters& counters();

}  // namespace gpjit::hooks
