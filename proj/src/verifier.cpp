// SPDX-License-Identifier: Apache-2.0
#include "hyperion/bpf/verifier.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>

namespace hyperion::bpf {

const char* verifier_error_name(VerifierErrorKind k) {
  switch (k) {
    case VerifierErrorKind::kNone: return "None";
    case VerifierErrorKind::kUninitializedRegister: return "UninitializedRegister";
    case VerifierErrorKind::kUnboundedLoop: return "UnboundedLoop";
    case VerifierErrorKind::kOutOfBoundsAccess: return "OutOfBoundsAccess";
    case VerifierErrorKind::kUnknownHelper: return "UnknownHelper";
    case VerifierErrorKind::kTooLarge: return "TooLarge";
    case VerifierErrorKind::kBadControlFlow: return "BadControlFlow";
    case VerifierErrorKind::kIllegalWrite: return "IllegalWrite";
  }
  return "?";
}

namespace {

constexpr std::uint64_t kU32Max = 0xFFFFFFFFull;
constexpr std::int64_t kPtrDeltaCap = std::int64_t{1} << 31;

enum class RegKind : std::uint8_t { kUninit, kScalar, kPacketPtr, kStackPtr };

struct RegAbs {
  RegKind kind = RegKind::kUninit;
  std::uint64_t umin = 0, umax = 0;   // scalar unsigned range
  std::int64_t off_min = 0, off_max = 0;  // pointer offset range
  bool pkt_len = false;

  bool operator==(const RegAbs&) const = default;

  static RegAbs uninit() { return {}; }
  static RegAbs scalar(std::uint64_t lo, std::uint64_t hi, bool plen = false) {
    RegAbs r;
    r.kind = RegKind::kScalar;
    r.umin = lo;
    r.umax = hi;
    r.pkt_len = plen;
    return r;
  }
  static RegAbs konst(std::uint64_t v) { return scalar(v, v); }
  static RegAbs any_scalar() { return scalar(0, UINT64_MAX); }
  static RegAbs ptr(RegKind k, std::int64_t lo, std::int64_t hi) {
    RegAbs r;
    r.kind = k;
    r.off_min = lo;
    r.off_max = hi;
    return r;
  }
  bool is_ptr() const { return kind == RegKind::kPacketPtr || kind == RegKind::kStackPtr; }
  bool is_const() const { return kind == RegKind::kScalar && umin == umax; }
};

struct AbsState {
  std::array<RegAbs, kRegCount> regs{};
  std::uint32_t min_pkt_len = 0;

  bool operator==(const AbsState&) const = default;
};

struct Key {
  std::uint32_t pc = 0;
  AbsState st;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
      h ^= h >> 29;
    };
    mix(k.pc);
    mix(k.st.min_pkt_len);
    for (const RegAbs& r : k.st.regs) {
      mix(static_cast<std::uint64_t>(r.kind) | (static_cast<std::uint64_t>(r.pkt_len) << 8));
      mix(r.umin);
      mix(r.umax);
      mix(static_cast<std::uint64_t>(r.off_min));
      mix(static_cast<std::uint64_t>(r.off_max));
    }
    return static_cast<std::size_t>(h);
  }
};

std::uint64_t sext32(std::int32_t v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

std::uint64_t mask_up(std::uint64_t x) {
  int w = std::bit_width(x);
  return w >= 64 ? UINT64_MAX : ((std::uint64_t{1} << w) - 1);
}

std::uint64_t bswap_width(std::uint64_t v, int width) {
  switch (width) {
    case 16: return __builtin_bswap16(static_cast<std::uint16_t>(v));
    case 32: return __builtin_bswap32(static_cast<std::uint32_t>(v));
    default: return __builtin_bswap64(v);
  }
}

// Interval arithmetic for 64-bit scalar ops; widens to the full range when
// the bound cannot be tracked exactly.
RegAbs scalar_alu64(std::uint8_t op, const RegAbs& d, const RegAbs& s, std::int32_t imm,
                    bool reg_src) {
  std::uint64_t dlo = d.umin, dhi = d.umax, slo = s.umin, shi = s.umax;
  switch (op) {
    case kAluAdd:
      if (dhi > UINT64_MAX - shi) return RegAbs::any_scalar();
      return RegAbs::scalar(dlo + slo, dhi + shi);
    case kAluSub:
      if (dlo < shi) return RegAbs::any_scalar();
      return RegAbs::scalar(dlo - shi, dhi - slo);
    case kAluMul:
      if (dhi != 0 && shi > UINT64_MAX / dhi) return RegAbs::any_scalar();
      return RegAbs::scalar(dlo * slo, dhi * shi);
    case kAluDiv:
      if (shi == 0) return RegAbs::konst(0);  // unreachable: traps at runtime
      return RegAbs::scalar(dlo / shi, slo == 0 ? dhi : dhi / slo);
    case kAluMod:
      if (shi == 0) return RegAbs::konst(0);
      return RegAbs::scalar(0, std::min(dhi, shi - 1));
    case kAluAnd:
      return RegAbs::scalar(0, std::min(dhi, shi));
    case kAluOr:
      return RegAbs::scalar(std::max(dlo, slo), mask_up(dhi | shi));
    case kAluXor:
      return RegAbs::scalar(0, mask_up(dhi | shi));
    case kAluLsh: {
      if (!s.is_const()) return RegAbs::any_scalar();
      unsigned sh = static_cast<unsigned>(slo & 63);
      if (sh != 0 && dhi > (UINT64_MAX >> sh)) return RegAbs::any_scalar();
      return RegAbs::scalar(dlo << sh, dhi << sh);
    }
    case kAluRsh: {
      if (!s.is_const()) return RegAbs::scalar(0, dhi);
      unsigned sh = static_cast<unsigned>(slo & 63);
      return RegAbs::scalar(dlo >> sh, dhi >> sh);
    }
    case kAluArsh: {
      if (!s.is_const() || dhi > static_cast<std::uint64_t>(INT64_MAX)) {
        return RegAbs::any_scalar();
      }
      unsigned sh = static_cast<unsigned>(slo & 63);
      return RegAbs::scalar(dlo >> sh, dhi >> sh);
    }
    case kAluEnd: {
      // reg_src selects big-endian conversion; imm is the width
      std::uint64_t wmask = imm >= 64 ? UINT64_MAX : ((std::uint64_t{1} << imm) - 1);
      if (!reg_src) return RegAbs::scalar(0, std::min(dhi, wmask));  // to-LE = mask
      if (d.is_const()) return RegAbs::konst(bswap_width(dlo, imm));
      return RegAbs::scalar(0, wmask);
    }
    default:
      return RegAbs::any_scalar();
  }
}

// 32-bit ALU: exact for const operands, conservative otherwise. Results are
// zero-extended 32-bit values.
RegAbs scalar_alu32(std::uint8_t op, const RegAbs& d, const RegAbs& s) {
  auto u32 = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  if (d.is_const() && s.is_const()) {
    std::uint32_t a = u32(d.umin), b = u32(s.umin);
    std::uint32_t r = 0;
    switch (op) {
      case kAluAdd: r = a + b; break;
      case kAluSub: r = a - b; break;
      case kAluMul: r = a * b; break;
      case kAluDiv: r = b == 0 ? 0 : a / b; break;  // zero divisor traps at runtime
      case kAluMod: r = b == 0 ? 0 : a % b; break;
      case kAluAnd: r = a & b; break;
      case kAluOr: r = a | b; break;
      case kAluXor: r = a ^ b; break;
      case kAluLsh: r = a << (b & 31); break;
      case kAluRsh: r = a >> (b & 31); break;
      case kAluArsh: r = static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> (b & 31)); break;
      default: return RegAbs::scalar(0, kU32Max);
    }
    return RegAbs::konst(r);
  }
  if (op == kAluAnd) return RegAbs::scalar(0, std::min({d.umax, s.umax, kU32Max}));
  return RegAbs::scalar(0, kU32Max);
}

struct Succ {
  std::uint32_t pc = 0;
  AbsState st;
};

class Verifier {
 public:
  Verifier(const Program& p, const HelperTable& helpers, VerifierLimits lim)
      : prog_(p), helpers_(helpers), lim_(lim) {}

  VerifyResult run();

 private:
  struct StepOut {
    std::array<Succ, 2> succ;
    int n = 0;
    bool terminal = false;
  };

  bool fail(VerifierErrorKind k, std::int64_t pc, std::string msg) {
    result_.ok = false;
    result_.error = k;
    result_.detail = std::move(msg);
    result_.insn_index = pc;
    failed_ = true;
    return false;
  }

  bool read_ok(const RegAbs& r, std::uint32_t pc, const char* what) {
    if (r.kind == RegKind::kUninit) {
      return fail(VerifierErrorKind::kUninitializedRegister, pc,
                  std::string("read of uninitialized register (") + what + ")");
    }
    return true;
  }

  bool valid_target(std::int64_t t) const {
    if (t < 0 || t >= static_cast<std::int64_t>(prog_.insns.size())) return false;
    return !wide_second_[static_cast<std::size_t>(t)];
  }

  bool check_mem(const AbsState& st, const RegAbs& base, std::int16_t ioff, std::uint32_t size,
                 std::uint32_t pc, const char* what);
  bool step(std::uint32_t pc, const AbsState& st, StepOut& out);
  bool step_alu(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out);
  bool step_jmp(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out);
  bool step_call(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out);

  const Program& prog_;
  const HelperTable& helpers_;
  VerifierLimits lim_;
  std::vector<bool> wide_second_;
  std::uint32_t stack_usage_ = 0;
  std::set<std::uint32_t> helper_ids_;
  VerifyResult result_;
  bool failed_ = false;
};

bool Verifier::check_mem(const AbsState& st, const RegAbs& base, std::int16_t ioff,
                         std::uint32_t size, std::uint32_t pc, const char* what) {
  if (base.kind == RegKind::kUninit) {
    return fail(VerifierErrorKind::kUninitializedRegister, pc,
                std::string("memory access through uninitialized register (") + what + ")");
  }
  if (base.kind == RegKind::kScalar) {
    return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                std::string("memory access through non-pointer value (") + what + ")");
  }
  std::int64_t lo = base.off_min + ioff;
  std::int64_t hi = base.off_max + ioff;
  if (base.kind == RegKind::kStackPtr) {
    bool in_stack = lo >= -static_cast<std::int64_t>(kStackSize) &&
                    hi + static_cast<std::int64_t>(size) <= 0;
    bool in_window = lo >= 0 && hi + static_cast<std::int64_t>(size) <=
                                    static_cast<std::int64_t>(kWindowSize);
    if (!in_stack && !in_window) {
      return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                  std::string("frame access out of bounds (") + what + ")");
    }
    if (in_stack) {
      stack_usage_ = std::max(stack_usage_, static_cast<std::uint32_t>(-lo));
    }
    return true;
  }
  // packet
  if (lo < 0 || hi + static_cast<std::int64_t>(size) >
                    static_cast<std::int64_t>(st.min_pkt_len)) {
    return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                std::string("packet access not covered by a bounds check (") + what + ")");
  }
  return true;
}

bool Verifier::step_alu(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out) {
  bool is64 = in.cls() == kClassAlu64;
  std::uint8_t op = in.alu_op();
  AbsState next = st;
  const RegAbs& dst = st.regs[in.dst];

  RegAbs src_val;
  if (op == kAluNeg || op == kAluEnd) {
    src_val = RegAbs::konst(0);
  } else if (in.is_reg_src()) {
    src_val = st.regs[in.src];
    if (!read_ok(src_val, pc, "alu src")) return false;
  } else {
    src_val = RegAbs::konst(is64 ? sext32(in.imm)
                                 : static_cast<std::uint64_t>(static_cast<std::uint32_t>(in.imm)));
  }

  if (in.dst == kFrameReg) {
    return fail(VerifierErrorKind::kIllegalWrite, pc, "r10 is read-only");
  }

  RegAbs res;
  if (op == kAluMov) {
    if (is64) {
      res = src_val;
    } else {
      if (src_val.is_ptr()) {
        return fail(VerifierErrorKind::kOutOfBoundsAccess, pc, "32-bit move of a pointer");
      }
      res = RegAbs::scalar(std::min(src_val.umin, kU32Max), std::min(src_val.umax, kU32Max),
                           src_val.pkt_len);
    }
  } else if (op == kAluEnd) {
    // byte swap lives in the 32-bit class but acts on the full register
    if (!read_ok(dst, pc, "alu dst")) return false;
    if (dst.is_ptr()) {
      return fail(VerifierErrorKind::kOutOfBoundsAccess, pc, "byte swap of a pointer");
    }
    res = scalar_alu64(kAluEnd, dst, RegAbs::konst(0), in.imm, in.is_reg_src());
  } else {
    if (!read_ok(dst, pc, "alu dst")) return false;
    if (!is64) {
      if (dst.is_ptr() || src_val.is_ptr()) {
        return fail(VerifierErrorKind::kOutOfBoundsAccess, pc, "32-bit alu on a pointer");
      }
      res = scalar_alu32(op, dst, src_val);
    } else if (op == kAluNeg) {
      if (dst.is_ptr()) {
        return fail(VerifierErrorKind::kOutOfBoundsAccess, pc, "negation of a pointer");
      }
      res = dst.is_const() ? RegAbs::konst(0 - dst.umin) : RegAbs::any_scalar();
    } else if (dst.is_ptr() || src_val.is_ptr()) {
      // pointer arithmetic: ADD/SUB with a bounded scalar delta
      const RegAbs* base = nullptr;
      const RegAbs* delta = nullptr;
      if (op == kAluAdd && dst.is_ptr() && !src_val.is_ptr()) {
        base = &dst;
        delta = &src_val;
      } else if (op == kAluAdd && !dst.is_ptr() && src_val.is_ptr()) {
        base = &src_val;
        delta = &dst;
      } else if (op == kAluSub && dst.is_ptr() && !src_val.is_ptr()) {
        base = &dst;
        delta = &src_val;
      } else {
        return fail(VerifierErrorKind::kOutOfBoundsAccess, pc, "unsupported pointer arithmetic");
      }
      std::int64_t dlo, dhi;
      if (delta->is_const()) {
        dlo = dhi = static_cast<std::int64_t>(delta->umin);
      } else if (delta->umax <= static_cast<std::uint64_t>(kPtrDeltaCap)) {
        dlo = static_cast<std::int64_t>(delta->umin);
        dhi = static_cast<std::int64_t>(delta->umax);
      } else {
        return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                    "pointer arithmetic with an unbounded scalar");
      }
      if (op == kAluSub) {
        res = RegAbs::ptr(base->kind, base->off_min - dhi, base->off_max - dlo);
      } else {
        res = RegAbs::ptr(base->kind, base->off_min + dlo, base->off_max + dhi);
      }
    } else {
      res = scalar_alu64(op, dst, src_val, in.imm, in.is_reg_src());
    }
  }

  next.regs[in.dst] = res;
  out.succ[0] = {pc + 1, std::move(next)};
  out.n = 1;
  return true;
}

bool Verifier::step_call(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out) {
  std::uint32_t id = static_cast<std::uint32_t>(in.imm);
  const HelperSignature* sig = helpers_.find(id);
  if (!sig) {
    return fail(VerifierErrorKind::kUnknownHelper, pc,
                "call to unregistered helper " + std::to_string(id));
  }
  helper_ids_.insert(id);

  for (int i = 0; i < 5; ++i) {
    ArgKind kind = sig->args[static_cast<std::size_t>(i)];
    if (kind == ArgKind::kNone) continue;
    const RegAbs& arg = st.regs[static_cast<std::size_t>(i) + 1];
    if (!read_ok(arg, pc, "helper argument")) return false;
    switch (kind) {
      case ArgKind::kAny:
        break;
      case ArgKind::kWindowOff: {
        if (arg.kind != RegKind::kScalar || arg.umax > kWindowSize - 4096) {
          return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                      "helper window offset not provably in bounds");
        }
        break;
      }
      case ArgKind::kMemOff: {
        const RegAbs& len = st.regs[static_cast<std::size_t>(i) + 2];
        if (!read_ok(len, pc, "helper length argument")) return false;
        if (arg.kind != RegKind::kScalar || len.kind != RegKind::kScalar ||
            len.umax > kMaxEmit) {
          return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                      "helper memory range not provably in bounds");
        }
        bool in_window = arg.umax <= kWindowSize && arg.umax + len.umax <= kWindowSize;
        std::int64_t smin = static_cast<std::int64_t>(arg.umin);
        std::int64_t smax = static_cast<std::int64_t>(arg.umax);
        bool negative_range = arg.umin > static_cast<std::uint64_t>(INT64_MAX) &&
                              arg.umax > static_cast<std::uint64_t>(INT64_MAX);
        bool in_stack = negative_range && smin >= -static_cast<std::int64_t>(kStackSize) &&
                        smax + static_cast<std::int64_t>(len.umax) <= 0;
        if (!in_window && !in_stack) {
          return fail(VerifierErrorKind::kOutOfBoundsAccess, pc,
                      "helper memory range not provably in bounds");
        }
        if (in_stack) {
          stack_usage_ = std::max(stack_usage_, static_cast<std::uint32_t>(-smin));
        }
        break;
      }
      case ArgKind::kLen:
        break;  // validated with its kMemOff
      case ArgKind::kNone:
        break;
    }
  }

  AbsState next = st;
  for (int r = 1; r <= 5; ++r) next.regs[static_cast<std::size_t>(r)] = RegAbs::uninit();
  next.regs[0] = sig->returns_packet_len ? RegAbs::scalar(0, kMaxPacket, true)
                                         : RegAbs::any_scalar();
  out.succ[0] = {pc + 1, std::move(next)};
  out.n = 1;
  return true;
}

bool Verifier::step_jmp(std::uint32_t pc, const AbsState& st, const Insn& in, StepOut& out) {
  bool is32 = in.cls() == kClassJmp32;
  std::uint8_t op = in.alu_op();

  if (op == kJmpExit) {
    if (!read_ok(st.regs[0], pc, "r0 at exit")) return false;
    out.terminal = true;
    return true;
  }
  std::int64_t target = static_cast<std::int64_t>(pc) + 1 + in.off;
  if (op == kJmpJa) {
    if (!valid_target(target)) {
      return fail(VerifierErrorKind::kBadControlFlow, pc, "jump target out of program");
    }
    out.succ[0] = {static_cast<std::uint32_t>(target), st};
    out.n = 1;
    return true;
  }
  if (op == kJmpCall) {
    return step_call(pc, st, in, out);
  }

  const RegAbs& dst = st.regs[in.dst];
  if (!read_ok(dst, pc, "jump dst")) return false;
  RegAbs src_val;
  if (in.is_reg_src()) {
    src_val = st.regs[in.src];
    if (!read_ok(src_val, pc, "jump src")) return false;
  } else {
    src_val = RegAbs::konst(is32 ? static_cast<std::uint64_t>(static_cast<std::uint32_t>(in.imm))
                                 : sext32(in.imm));
  }
  if (!valid_target(target)) {
    return fail(VerifierErrorKind::kBadControlFlow, pc, "jump target out of program");
  }

  bool taken_feasible = true;
  bool fall_feasible = true;
  AbsState taken = st;
  AbsState fall = st;

  // Exact decision for constant operands.
  if (dst.is_const() && src_val.is_const() && !dst.is_ptr() && !src_val.is_ptr()) {
    std::uint64_t a = dst.umin, b = src_val.umin;
    if (is32) {
      a &= kU32Max;
      b &= kU32Max;
    }
    std::int64_t sa = is32 ? static_cast<std::int32_t>(a) : static_cast<std::int64_t>(a);
    std::int64_t sb = is32 ? static_cast<std::int32_t>(b) : static_cast<std::int64_t>(b);
    bool t = false;
    switch (op) {
      case kJmpJeq: t = a == b; break;
      case kJmpJne: t = a != b; break;
      case kJmpJgt: t = a > b; break;
      case kJmpJge: t = a >= b; break;
      case kJmpJlt: t = a < b; break;
      case kJmpJle: t = a <= b; break;
      case kJmpJset: t = (a & b) != 0; break;
      case kJmpJsgt: t = sa > sb; break;
      case kJmpJsge: t = sa >= sb; break;
      case kJmpJslt: t = sa < sb; break;
      case kJmpJsle: t = sa <= sb; break;
      default: break;
    }
    taken_feasible = t;
    fall_feasible = !t;
  } else if (dst.kind == RegKind::kScalar && src_val.is_const() &&
             (!is32 || dst.umax <= kU32Max)) {
    // Unsigned interval refinement against a constant.
    std::uint64_t c = src_val.umin;
    if (is32) c &= kU32Max;
    auto clamp = [](AbsState& s, std::uint8_t r, std::uint64_t lo, std::uint64_t hi,
                    bool& feasible) {
      RegAbs& v = s.regs[r];
      lo = std::max(lo, v.umin);
      hi = std::min(hi, v.umax);
      if (lo > hi) {
        feasible = false;
        return;
      }
      bool plen = v.pkt_len;
      v = RegAbs::scalar(lo, hi, plen);
    };
    switch (op) {
      case kJmpJeq:
        clamp(taken, in.dst, c, c, taken_feasible);
        if (dst.is_const()) fall_feasible = false;
        break;
      case kJmpJne:
        clamp(fall, in.dst, c, c, fall_feasible);
        if (dst.is_const()) taken_feasible = false;
        break;
      case kJmpJgt:
        if (c == UINT64_MAX) taken_feasible = false;
        else clamp(taken, in.dst, c + 1, UINT64_MAX, taken_feasible);
        clamp(fall, in.dst, 0, c, fall_feasible);
        break;
      case kJmpJge:
        clamp(taken, in.dst, c, UINT64_MAX, taken_feasible);
        if (c == 0) fall_feasible = false;
        else clamp(fall, in.dst, 0, c - 1, fall_feasible);
        break;
      case kJmpJlt:
        if (c == 0) taken_feasible = false;
        else clamp(taken, in.dst, 0, c - 1, taken_feasible);
        clamp(fall, in.dst, c, UINT64_MAX, fall_feasible);
        break;
      case kJmpJle:
        clamp(taken, in.dst, 0, c, taken_feasible);
        if (c == UINT64_MAX) fall_feasible = false;
        else clamp(fall, in.dst, c + 1, UINT64_MAX, fall_feasible);
        break;
      case kJmpJset:
        if (c == 0) taken_feasible = false;
        break;
      default:
        break;  // signed compares: keep both branches, no refinement
    }
    // A compare against the packet-length register establishes a minimum
    // packet length on the matching branch.
    if (dst.pkt_len) {
      auto raise = [](AbsState& s, std::uint64_t floor_len) {
        s.min_pkt_len = std::max<std::uint32_t>(
            s.min_pkt_len, static_cast<std::uint32_t>(std::min<std::uint64_t>(floor_len, kMaxPacket)));
      };
      switch (op) {
        case kJmpJge: raise(taken, c); break;
        case kJmpJgt: if (c < UINT64_MAX) raise(taken, c + 1); break;
        case kJmpJlt: raise(fall, c); break;
        case kJmpJle: if (c < UINT64_MAX) raise(fall, c + 1); break;
        case kJmpJeq: raise(taken, c); break;
        case kJmpJne: raise(fall, c); break;
        default: break;
      }
    }
  }

  out.n = 0;
  if (taken_feasible) out.succ[out.n++] = {static_cast<std::uint32_t>(target), std::move(taken)};
  if (fall_feasible) out.succ[out.n++] = {pc + 1, std::move(fall)};
  if (out.n == 0) {
    // Neither branch is feasible: the instruction is unreachable in this
    // abstract state; treat as terminal for bound purposes.
    out.terminal = true;
  }
  return true;
}

bool Verifier::step(std::uint32_t pc, const AbsState& st, StepOut& out) {
  const Insn& in = prog_.insns[pc];
  switch (in.cls()) {
    case kClassAlu64:
    case kClassAlu32:
      return step_alu(pc, st, in, out);
    case kClassJmp:
    case kClassJmp32:
      return step_jmp(pc, st, in, out);
    case kClassLd: {  // lddw
      if (in.dst == kFrameReg) {
        return fail(VerifierErrorKind::kIllegalWrite, pc, "r10 is read-only");
      }
      AbsState next = st;
      next.regs[in.dst] = RegAbs::konst(prog_.imm64_at(pc));
      out.succ[0] = {pc + 2, std::move(next)};
      out.n = 1;
      return true;
    }
    case kClassLdx: {
      if (in.dst == kFrameReg) {
        return fail(VerifierErrorKind::kIllegalWrite, pc, "r10 is read-only");
      }
      std::uint32_t size = Insn::size_bytes(in.mem_size());
      if (!check_mem(st, st.regs[in.src], in.off, size, pc, "load")) return false;
      AbsState next = st;
      next.regs[in.dst] = size == 8
                              ? RegAbs::any_scalar()
                              : RegAbs::scalar(0, (std::uint64_t{1} << (8 * size)) - 1);
      out.succ[0] = {pc + 1, std::move(next)};
      out.n = 1;
      return true;
    }
    case kClassSt:
    case kClassStx: {
      std::uint32_t size = Insn::size_bytes(in.mem_size());
      if (in.cls() == kClassStx) {
        if (!read_ok(st.regs[in.src], pc, "store value")) return false;
      }
      if (!check_mem(st, st.regs[in.dst], in.off, size, pc, "store")) return false;
      out.succ[0] = {pc + 1, st};
      out.n = 1;
      return true;
    }
  }
  return fail(VerifierErrorKind::kBadControlFlow, pc, "undecodable instruction");
}

VerifyResult Verifier::run() {
  result_.ok = false;
  if (prog_.insns.empty()) {
    fail(VerifierErrorKind::kBadControlFlow, -1, "empty program");
    return result_;
  }
  if (prog_.insns.size() > lim_.max_insns) {
    fail(VerifierErrorKind::kTooLarge, -1,
         "program exceeds " + std::to_string(lim_.max_insns) + " instruction slots");
    return result_;
  }
  wide_second_.assign(prog_.insns.size(), false);
  for (std::size_t i = 0; i < prog_.insns.size(); ++i) {
    if (prog_.insns[i].is_wide()) wide_second_[i + 1] = true, ++i;
  }

  AbsState entry;
  entry.regs[1] = RegAbs::ptr(RegKind::kPacketPtr, 0, 0);
  entry.regs[2] = RegAbs::scalar(0, kMaxPacket, true);
  entry.regs[kFrameReg] = RegAbs::ptr(RegKind::kStackPtr, 0, 0);

  struct Node {
    bool black = false;
    std::uint64_t remaining = 0;
  };
  std::unordered_map<Key, Node, KeyHash> memo;
  struct Frame {
    Key key;
    StepOut step;
    int next = 0;
    std::uint64_t best = 0;
  };
  std::vector<Frame> stack;
  std::uint32_t states = 0;

  auto descend = [&](const Key& k, std::optional<std::uint64_t>& known) -> bool {
    auto it = memo.find(k);
    if (it != memo.end()) {
      if (!it->second.black) {
        return fail(VerifierErrorKind::kUnboundedLoop, k.pc,
                    "back-edge reaches an identical state (no bounded counter)");
      }
      known = it->second.remaining;
      return true;
    }
    if (++states > lim_.max_states) {
      return fail(VerifierErrorKind::kTooLarge, k.pc, "state exploration limit exceeded");
    }
    if (k.pc >= prog_.insns.size() || wide_second_[k.pc]) {
      return fail(VerifierErrorKind::kBadControlFlow, k.pc, "control flow leaves the program");
    }
    memo.emplace(k, Node{});
    Frame fr;
    fr.key = k;
    if (!step(k.pc, k.st, fr.step)) return false;
    stack.push_back(std::move(fr));
    known.reset();
    return true;
  };

  std::optional<std::uint64_t> known;
  if (!descend(Key{0, entry}, known)) return result_;

  std::uint64_t entry_remaining = known.value_or(0);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.step.n) {
      Succ& s = f.step.succ[f.next++];
      Key k{s.pc, std::move(s.st)};
      std::optional<std::uint64_t> child;
      if (!descend(k, child)) return result_;
      if (child) stack.back().best = std::max(stack.back().best, *child);
    } else {
      std::uint64_t rem = f.step.terminal ? 1 : 1 + f.best;
      memo[f.key] = Node{true, rem};
      std::uint64_t done = rem;
      stack.pop_back();
      if (stack.empty()) {
        entry_remaining = done;
      } else {
        stack.back().best = std::max(stack.back().best, done);
      }
    }
  }

  if (failed_) return result_;

  result_.ok = true;
  result_.error = VerifierErrorKind::kNone;
  result_.verified.program = prog_;
  result_.verified.max_instructions = entry_remaining;
  result_.verified.stack_usage = stack_usage_;
  result_.verified.helper_ids.assign(helper_ids_.begin(), helper_ids_.end());
  return result_;
}

}  // namespace

VerifyResult verify(const Program& p, const HelperTable& helpers, VerifierLimits limits) {
  return Verifier(p, helpers, limits).run();
}

}  // namespace hyperion::bpf
