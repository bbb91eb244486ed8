// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hyperion::bpf {

// Instruction class (opcode low 3 bits).
inline constexpr std::uint8_t kClassLd = 0x00;
inline constexpr std::uint8_t kClassLdx = 0x01;
inline constexpr std::uint8_t kClassSt = 0x02;
inline constexpr std::uint8_t kClassStx = 0x03;
inline constexpr std::uint8_t kClassAlu32 = 0x04;
inline constexpr std::uint8_t kClassJmp = 0x05;
inline constexpr std::uint8_t kClassJmp32 = 0x06;
inline constexpr std::uint8_t kClassAlu64 = 0x07;

// Source bit.
inline constexpr std::uint8_t kSrcK = 0x00;  // immediate operand
inline constexpr std::uint8_t kSrcX = 0x08;  // register operand

// ALU operation (opcode high 4 bits).
inline constexpr std::uint8_t kAluAdd = 0x00;
inline constexpr std::uint8_t kAluSub = 0x10;
inline constexpr std::uint8_t kAluMul = 0x20;
inline constexpr std::uint8_t kAluDiv = 0x30;
inline constexpr std::uint8_t kAluOr = 0x40;
inline constexpr std::uint8_t kAluAnd = 0x50;
inline constexpr std::uint8_t kAluLsh = 0x60;
inline constexpr std::uint8_t kAluRsh = 0x70;
inline constexpr std::uint8_t kAluNeg = 0x80;
inline constexpr std::uint8_t kAluMod = 0x90;
inline constexpr std::uint8_t kAluXor = 0xa0;
inline constexpr std::uint8_t kAluMov = 0xb0;
inline constexpr std::uint8_t kAluArsh = 0xc0;
inline constexpr std::uint8_t kAluEnd = 0xd0;

// Jump operation (opcode high 4 bits).
inline constexpr std::uint8_t kJmpJa = 0x00;
inline constexpr std::uint8_t kJmpJeq = 0x10;
inline constexpr std::uint8_t kJmpJgt = 0x20;
inline constexpr std::uint8_t kJmpJge = 0x30;
inline constexpr std::uint8_t kJmpJset = 0x40;
inline constexpr std::uint8_t kJmpJne = 0x50;
inline constexpr std::uint8_t kJmpJsgt = 0x60;
inline constexpr std::uint8_t kJmpJsge = 0x70;
inline constexpr std::uint8_t kJmpCall = 0x80;
inline constexpr std::uint8_t kJmpExit = 0x90;
inline constexpr std::uint8_t kJmpJlt = 0xa0;
inline constexpr std::uint8_t kJmpJle = 0xb0;
inline constexpr std::uint8_t kJmpJslt = 0xc0;
inline constexpr std::uint8_t kJmpJsle = 0xd0;

// Memory access size (opcode bits 3-4).
inline constexpr std::uint8_t kSizeW = 0x00;   // 4 bytes
inline constexpr std::uint8_t kSizeH = 0x08;   // 2 bytes
inline constexpr std::uint8_t kSizeB = 0x10;   // 1 byte
inline constexpr std::uint8_t kSizeDw = 0x18;  // 8 bytes

// Memory access mode (opcode bits 5-7).
inline constexpr std::uint8_t kModeImm = 0x00;
inline constexpr std::uint8_t kModeMem = 0x60;

inline constexpr std::uint8_t kOpLddw = kClassLd | kSizeDw | kModeImm;  // 0x18

inline constexpr std::uint32_t kRegCount = 11;
inline constexpr std::uint8_t kFrameReg = 10;

// One 64-bit instruction slot. LD_IMM64 occupies two consecutive slots; the
// second slot carries the upper 32 immediate bits and is otherwise zero.
struct Insn {
  std::uint8_t opcode = 0;
  std::uint8_t dst = 0;
  std::uint8_t src = 0;
  std::int16_t off = 0;
  std::int32_t imm = 0;

  bool operator==(const Insn&) const = default;

  std::uint8_t cls() const { return opcode & 0x07; }
  std::uint8_t alu_op() const { return opcode & 0xf0; }
  bool is_reg_src() const { return (opcode & kSrcX) != 0; }
  std::uint8_t mem_size() const { return opcode & 0x18; }
  std::uint8_t mem_mode() const { return static_cast<std::uint8_t>(opcode & 0xe0); }
  bool is_wide() const { return opcode == kOpLddw; }

  static std::uint32_t size_bytes(std::uint8_t size_bits) {
    switch (size_bits) {
      case kSizeW: return 4;
      case kSizeH: return 2;
      case kSizeB: return 1;
      default: return 8;
    }
  }
};

enum class Section : std::uint8_t { kDatapath, kInit };

struct Program {
  std::string name = "prog";
  Section section = Section::kDatapath;
  std::vector<Insn> insns;  // slot array; lddw spans two slots

  std::uint64_t imm64_at(std::size_t i) const {
    return static_cast<std::uint64_t>(static_cast<std::uint32_t>(insns[i].imm)) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(insns[i + 1].imm)) << 32);
  }
};

enum class LoadError : std::uint8_t {
  kNone,
  kMalformedEncoding,
  kUnknownOpcode,
  kTruncatedWideInstruction,
};

struct LoadResult {
  bool ok = false;
  LoadError error = LoadError::kNone;
  std::size_t byte_offset = 0;  // offending image offset when !ok
  std::string detail;
  Program program;
};

// True when `opcode` belongs to the supported ISA subset.
bool opcode_valid(std::uint8_t opcode);

// Decodes a raw little-endian bytecode image.
LoadResult load(std::span<const std::uint8_t> image, std::string name = "prog");

// Exact inverse of load() for well-formed programs.
std::vector<std::uint8_t> encode_program(const Program& p);

}  // namespace hyperion::bpf
