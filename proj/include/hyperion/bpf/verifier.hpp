// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperion/bpf/abi.hpp"
#include "hyperion/bpf/insn.hpp"

namespace hyperion::bpf {

enum class VerifierErrorKind : std::uint8_t {
  kNone,
  kUninitializedRegister,
  kUnboundedLoop,
  kOutOfBoundsAccess,
  kUnknownHelper,
  kTooLarge,
  kBadControlFlow,
  kIllegalWrite,
};

const char* verifier_error_name(VerifierErrorKind k);

struct VerifierLimits {
  std::uint32_t max_insns = 4096;
  std::uint32_t max_states = 65536;
};

// Output of verify(); exists only for accepted programs.
struct VerifiedProgram {
  Program program;
  std::uint64_t max_instructions = 0;      // static bound on executed instructions
  std::uint32_t stack_usage = 0;           // deepest stack byte touched
  std::vector<std::uint32_t> helper_ids;   // sorted, unique
};

struct VerifyResult {
  bool ok = false;
  VerifierErrorKind error = VerifierErrorKind::kNone;
  std::string detail;
  std::int64_t insn_index = -1;  // offending slot index, -1 if n/a
  VerifiedProgram verified;
};

// Abstract interpretation over register states. Every reachable path is
// explored with per-path constant propagation and unsigned interval tracking;
// loops verify only when constant feasibility pruning unrolls them (a state
// revisited while still on the exploration stack is an unbounded loop).
// Exploration is capped at limits.max_states derived states.
VerifyResult verify(const Program& p, const HelperTable& helpers, VerifierLimits limits = {});

}  // namespace hyperion::bpf
