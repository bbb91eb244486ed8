// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "hyperion/bpf/insn.hpp"

namespace hyperion::bpf {

struct AsmResult {
  bool ok = false;
  std::string error;  // "line N: ..." when !ok
  Program program;
};

// Assembles kernel-style mnemonics, one instruction per line. Supports
// `label:` definitions, `; comments`, register operands rN, decimal/hex
// immediates, and `[rN+off]` memory operands. Jump targets may be labels or
// relative slot offsets (+N / -N).
AsmResult assemble(const std::string& text, std::string name = "prog");

// One instruction per line with numeric jump offsets; assemble(disassemble(p))
// reproduces p for any loadable program.
std::string disassemble(const Program& p);

}  // namespace hyperion::bpf
