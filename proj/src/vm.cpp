// SPDX-License-Identifier: Apache-2.0
#include "hyperion/bpf/vm.hpp"

#include "hyperion/wire/message.hpp"

namespace hyperion::bpf {

namespace {

std::uint64_t sext(std::int32_t v) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
}

std::uint64_t load_le(const std::uint8_t* p, std::uint32_t size) {
  switch (size) {
    case 1: return *p;
    case 2: return wire::get_u16(p);
    case 4: return wire::get_u32(p);
    default: return wire::get_u64(p);
  }
}

void store_le(std::uint8_t* p, std::uint32_t size, std::uint64_t v) {
  switch (size) {
    case 1: *p = static_cast<std::uint8_t>(v); break;
    case 2: wire::put_u16(p, static_cast<std::uint16_t>(v)); break;
    case 4: wire::put_u32(p, static_cast<std::uint32_t>(v)); break;
    default: wire::put_u64(p, v); break;
  }
}

}  // namespace

sim::Task<ExecResult> execute(const VerifiedProgram& vp, ExecutionContext& ctx) {
  const auto& insns = vp.program.insns;
  std::array<std::uint64_t, kRegCount> r{};
  r[1] = kPacketBase;
  r[2] = ctx.packet.size();
  r[10] = kStackTop;
  const std::uint64_t fuel = ctx.fuel != 0 ? ctx.fuel : vp.max_instructions;
  std::uint64_t used = 0;
  std::size_t pc = 0;

  for (;;) {
    if (used == fuel) co_return ExecResult{0, TrapCode::kFuelExhausted, used};
    if (pc >= insns.size()) co_return ExecResult{0, TrapCode::kOutOfBounds, used};
    ++used;
    const Insn& in = insns[pc];

    switch (in.cls()) {
      case kClassAlu64:
      case kClassAlu32: {
        bool is64 = in.cls() == kClassAlu64;
        std::uint8_t op = in.alu_op();
        std::uint64_t a = r[in.dst];
        std::uint64_t b = in.is_reg_src()
                              ? r[in.src]
                              : (is64 ? sext(in.imm)
                                      : static_cast<std::uint64_t>(
                                            static_cast<std::uint32_t>(in.imm)));
        std::uint64_t res = 0;
        if (op == kAluEnd) {
          // ALU32-class byte swap acting on the full register
          std::uint64_t wmask =
              in.imm >= 64 ? UINT64_MAX : ((std::uint64_t{1} << in.imm) - 1);
          if (in.is_reg_src()) {  // to big-endian
            switch (in.imm) {
              case 16: res = __builtin_bswap16(static_cast<std::uint16_t>(a)); break;
              case 32: res = __builtin_bswap32(static_cast<std::uint32_t>(a)); break;
              default: res = __builtin_bswap64(a); break;
            }
          } else {  // to little-endian: identity on the low bits
            res = a & wmask;
          }
          r[in.dst] = res;
          ++pc;
          break;
        }
        if (is64) {
          switch (op) {
            case kAluAdd: res = a + b; break;
            case kAluSub: res = a - b; break;
            case kAluMul: res = a * b; break;
            case kAluDiv:
              if (b == 0) co_return ExecResult{0, TrapCode::kDivideByZero, used};
              res = a / b;
              break;
            case kAluMod:
              if (b == 0) co_return ExecResult{0, TrapCode::kDivideByZero, used};
              res = a % b;
              break;
            case kAluOr: res = a | b; break;
            case kAluAnd: res = a & b; break;
            case kAluLsh: res = a << (b & 63); break;
            case kAluRsh: res = a >> (b & 63); break;
            case kAluNeg: res = 0 - a; break;
            case kAluXor: res = a ^ b; break;
            case kAluMov: res = b; break;
            case kAluArsh:
              res = static_cast<std::uint64_t>(static_cast<std::int64_t>(a) >>
                                               (b & 63));
              break;
          }
        } else {
          std::uint32_t a32 = static_cast<std::uint32_t>(a);
          std::uint32_t b32 = static_cast<std::uint32_t>(b);
          std::uint32_t r32 = 0;
          switch (op) {
            case kAluAdd: r32 = a32 + b32; break;
            case kAluSub: r32 = a32 - b32; break;
            case kAluMul: r32 = a32 * b32; break;
            case kAluDiv:
              if (b32 == 0) co_return ExecResult{0, TrapCode::kDivideByZero, used};
              r32 = a32 / b32;
              break;
            case kAluMod:
              if (b32 == 0) co_return ExecResult{0, TrapCode::kDivideByZero, used};
              r32 = a32 % b32;
              break;
            case kAluOr: r32 = a32 | b32; break;
            case kAluAnd: r32 = a32 & b32; break;
            case kAluLsh: r32 = a32 << (b32 & 31); break;
            case kAluRsh: r32 = a32 >> (b32 & 31); break;
            case kAluNeg: r32 = 0 - a32; break;
            case kAluXor: r32 = a32 ^ b32; break;
            case kAluMov: r32 = b32; break;
            case kAluArsh:
              r32 = static_cast<std::uint32_t>(static_cast<std::int32_t>(a32) >>
                                               (b32 & 31));
              break;
          }
          res = r32;
        }
        r[in.dst] = res;
        ++pc;
        break;
      }

      case kClassJmp:
      case kClassJmp32: {
        bool is32 = in.cls() == kClassJmp32;
        std::uint8_t op = in.alu_op();
        if (op == kJmpExit) {
          co_return ExecResult{r[0], TrapCode::kNone, used};
        }
        if (op == kJmpJa) {
          pc = pc + 1 + in.off;
          break;
        }
        if (op == kJmpCall) {
          std::uint32_t id = static_cast<std::uint32_t>(in.imm);
          const HelperFn* fn = ctx.helpers ? ctx.helpers->find_fn(id) : nullptr;
          if (!fn || !*fn) co_return ExecResult{0, TrapCode::kUnknownHelper, used};
          std::array<std::uint64_t, 5> args{r[1], r[2], r[3], r[4], r[5]};
          HelperResult hr = co_await (*fn)(ctx, args);
          if (hr.trap != TrapCode::kNone) co_return ExecResult{0, hr.trap, used};
          r[0] = hr.r0;
          r[1] = r[2] = r[3] = r[4] = r[5] = 0;  // caller-saved, defined cleared
          ++pc;
          break;
        }
        std::uint64_t a = r[in.dst];
        std::uint64_t b = in.is_reg_src()
                              ? r[in.src]
                              : (is32 ? static_cast<std::uint64_t>(
                                            static_cast<std::uint32_t>(in.imm))
                                      : sext(in.imm));
        if (is32) {
          a = static_cast<std::uint32_t>(a);
          b = static_cast<std::uint32_t>(b);
        }
        std::int64_t sa = is32 ? static_cast<std::int32_t>(a) : static_cast<std::int64_t>(a);
        std::int64_t sb = is32 ? static_cast<std::int32_t>(b) : static_cast<std::int64_t>(b);
        bool taken = false;
        switch (op) {
          case kJmpJeq: taken = a == b; break;
          case kJmpJgt: taken = a > b; break;
          case kJmpJge: taken = a >= b; break;
          case kJmpJset: taken = (a & b) != 0; break;
          case kJmpJne: taken = a != b; break;
          case kJmpJsgt: taken = sa > sb; break;
          case kJmpJsge: taken = sa >= sb; break;
          case kJmpJlt: taken = a < b; break;
          case kJmpJle: taken = a <= b; break;
          case kJmpJslt: taken = sa < sb; break;
          case kJmpJsle: taken = sa <= sb; break;
        }
        pc = taken ? pc + 1 + in.off : pc + 1;
        break;
      }

      case kClassLd: {  // lddw
        r[in.dst] = vp.program.imm64_at(pc);
        pc += 2;
        break;
      }

      case kClassLdx: {
        std::uint32_t size = Insn::size_bytes(in.mem_size());
        std::uint64_t addr = r[in.src] + static_cast<std::uint64_t>(
                                             static_cast<std::int64_t>(in.off));
        const std::uint8_t* p = ctx.mem(addr, size);
        if (!p) co_return ExecResult{0, TrapCode::kOutOfBounds, used};
        r[in.dst] = load_le(p, size);
        ++pc;
        break;
      }

      case kClassSt:
      case kClassStx: {
        std::uint32_t size = Insn::size_bytes(in.mem_size());
        std::uint64_t addr = r[in.dst] + static_cast<std::uint64_t>(
                                             static_cast<std::int64_t>(in.off));
        std::uint8_t* p = ctx.mem(addr, size);
        if (!p) co_return ExecResult{0, TrapCode::kOutOfBounds, used};
        std::uint64_t v = in.cls() == kClassStx ? r[in.src] : sext(in.imm);
        store_le(p, size, v);
        ++pc;
        break;
      }

      default:
        co_return ExecResult{0, TrapCode::kOutOfBounds, used};
    }
  }
}

}  // namespace hyperion::bpf
