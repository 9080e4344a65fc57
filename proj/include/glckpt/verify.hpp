#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Re-runnable property pack behind `glckpt verify`: every case builds a
// random program, drives it through checkpoint and restore, and checks the
// engine's core promises end to end. Zero failures is the pass condition.

namespace glckpt::harness {

struct VerifyOutcome {
  uint64_t cases = 0;
  uint64_t failures = 0;
  // One line per failing case, capped so a systemic failure stays readable.
  std::vector<std::string> messages;

  bool ok() const { return failures == 0; }
};

VerifyOutcome verify_properties(uint64_t seed, uint64_t cases);

}  // namespace glckpt::harness
