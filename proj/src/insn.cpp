// SPDX-License-Identifier: Apache-2.0
#include "hyperion/bpf/insn.hpp"

#include "hyperion/wire/message.hpp"

namespace hyperion::bpf {

bool opcode_valid(std::uint8_t opcode) {
  std::uint8_t cls = opcode & 0x07;
  std::uint8_t op = opcode & 0xf0;
  bool reg_src = (opcode & kSrcX) != 0;
  switch (cls) {
    case kClassAlu64:
      if (op == kAluEnd) return false;  // byte swap lives in the 32-bit class
      if (op == kAluNeg) return !reg_src;
      return op <= kAluArsh;
    case kClassAlu32:
      if (op == kAluNeg) return !reg_src;
      return op <= kAluEnd;  // END uses the src bit as LE/BE selector
    case kClassJmp:
      if (op == kJmpJa || op == kJmpCall || op == kJmpExit) return !reg_src;
      return op <= kJmpJsle;
    case kClassJmp32:
      if (op == kJmpJa || op == kJmpCall || op == kJmpExit) return false;
      return op <= kJmpJsle;
    case kClassLdx:
    case kClassSt:
    case kClassStx:
      return (opcode & 0xe0) == kModeMem;
    case kClassLd:
      return opcode == kOpLddw;
  }
  return false;
}

namespace {

LoadResult fail(LoadError e, std::size_t off, std::string detail) {
  LoadResult r;
  r.error = e;
  r.byte_offset = off;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

LoadResult load(std::span<const std::uint8_t> image, std::string name) {
  if (image.empty()) {
    return fail(LoadError::kMalformedEncoding, 0, "empty image");
  }
  if (image.size() % 8 != 0) {
    return fail(LoadError::kMalformedEncoding, image.size() & ~std::size_t{7},
                "image length is not a multiple of 8");
  }
  LoadResult r;
  r.program.name = std::move(name);
  std::size_t slots = image.size() / 8;
  r.program.insns.reserve(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    const std::uint8_t* p = image.data() + i * 8;
    Insn in;
    in.opcode = p[0];
    in.dst = p[1] & 0x0f;
    in.src = p[1] >> 4;
    in.off = static_cast<std::int16_t>(wire::get_u16(p + 2));
    in.imm = static_cast<std::int32_t>(wire::get_u32(p + 4));
    std::size_t byte_off = i * 8;
    if (!opcode_valid(in.opcode)) {
      return fail(LoadError::kUnknownOpcode, byte_off,
                  "unknown opcode " + std::to_string(in.opcode));
    }
    if (in.dst >= kRegCount || in.src >= kRegCount) {
      return fail(LoadError::kMalformedEncoding, byte_off, "register index out of range");
    }
    if (in.opcode == (kClassAlu32 | kAluEnd) || in.opcode == (kClassAlu32 | kAluEnd | kSrcX)) {
      if (in.imm != 16 && in.imm != 32 && in.imm != 64) {
        return fail(LoadError::kMalformedEncoding, byte_off, "byte swap width must be 16/32/64");
      }
    }
    r.program.insns.push_back(in);
    if (in.is_wide()) {
      if (i + 1 >= slots) {
        return fail(LoadError::kTruncatedWideInstruction, byte_off,
                    "lddw missing its second slot");
      }
      const std::uint8_t* q = image.data() + (i + 1) * 8;
      if (q[0] != 0 || q[1] != 0 || wire::get_u16(q + 2) != 0) {
        return fail(LoadError::kMalformedEncoding, (i + 1) * 8, "malformed lddw second slot");
      }
      Insn hi;
      hi.imm = static_cast<std::int32_t>(wire::get_u32(q + 4));
      r.program.insns.push_back(hi);
      ++i;
    }
  }
  r.ok = true;
  return r;
}

std::vector<std::uint8_t> encode_program(const Program& p) {
  std::vector<std::uint8_t> out(p.insns.size() * 8, 0);
  for (std::size_t i = 0; i < p.insns.size(); ++i) {
    const Insn& in = p.insns[i];
    std::uint8_t* q = out.data() + i * 8;
    q[0] = in.opcode;
    q[1] = static_cast<std::uint8_t>((in.src << 4) | (in.dst & 0x0f));
    wire::put_u16(q + 2, static_cast<std::uint16_t>(in.off));
    wire::put_u32(q + 4, static_cast<std::uint32_t>(in.imm));
  }
  return out;
}

}  // namespace hyperion::bpf
