// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hyperion/bpf/abi.hpp"
#include "hyperion/bpf/verifier.hpp"
#include "hyperion/sim/task.hpp"

namespace hyperion::bpf {

struct ExecResult {
  std::uint64_t ret = 0;
  TrapCode trap = TrapCode::kNone;
  std::uint64_t fuel_used = 0;  // executed instructions, including a trapping one
};

// Interprets a verified program to EXIT or trap. ctx.fuel == 0 selects the
// verifier's static instruction bound as the budget. Effects outside the
// context happen only through helpers.
sim::Task<ExecResult> execute(const VerifiedProgram& vp, ExecutionContext& ctx);

}  // namespace hyperion::bpf
