// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hyperion/sim/task.hpp"

namespace hyperion::bpf {

// Guest address map. r10 points at kStackTop; the 512-byte stack occupies
// [kStackTop-512, kStackTop) (negative frame offsets) and the 8 KiB data
// window [kStackTop, kStackTop+kWindowSize) (non-negative frame offsets).
// The request packet is mapped read/write at kPacketBase. A memory access
// must lie entirely within one region.
inline constexpr std::uint64_t kStackTop = 0x1'0000'0000ull;
inline constexpr std::uint32_t kStackSize = 512;
inline constexpr std::uint32_t kWindowSize = 8192;
inline constexpr std::uint64_t kPacketBase = 0x2'0000'0000ull;
inline constexpr std::uint32_t kMaxPacket = 8192;
inline constexpr std::uint32_t kMaxEmit = 8192;

enum class TrapCode : std::uint8_t {
  kNone = 0,
  kFuelExhausted = 1,
  kDivideByZero = 2,
  kBadHelperReturn = 3,
  kIsolationFault = 4,
  kOutOfBounds = 5,
  kUnknownHelper = 6,
};

const char* trap_name(TrapCode t);

// Standard helper ids (fixed). Ids below 1024 are reserved; slots may
// register tenant-local helpers at or above kFirstTenantHelperId.
inline constexpr std::uint32_t kHelperBlockRead = 1;   // (device, lba, win_off)
inline constexpr std::uint32_t kHelperBlockWrite = 2;  // (device, lba, win_off)
inline constexpr std::uint32_t kHelperPacketLen = 3;   // () -> len
inline constexpr std::uint32_t kHelperEmit = 4;        // (frame_off, len)
inline constexpr std::uint32_t kHelperTimeNowNs = 5;   // () -> virtual ns
inline constexpr std::uint32_t kHelperKvRoute = 6;     // (key) -> height<<32 | root_lba
inline constexpr std::uint32_t kFirstTenantHelperId = 1024;

// Argument kinds drive the verifier's static checks on helper calls.
enum class ArgKind : std::uint8_t {
  kNone,       // unused slot
  kAny,        // any initialized value; validated at runtime by the helper
  kWindowOff,  // window offset; [off, off+4096) must fit the window statically
  kMemOff,     // frame-relative offset, paired with the following kLen
  kLen,        // byte length bounding the preceding kMemOff
};

struct HelperSignature {
  std::uint32_t id = 0;
  std::string name;
  std::array<ArgKind, 5> args{ArgKind::kNone, ArgKind::kNone, ArgKind::kNone,
                              ArgKind::kNone, ArgKind::kNone};
  bool returns_packet_len = false;
};

struct HelperResult {
  std::uint64_t r0 = 0;
  TrapCode trap = TrapCode::kNone;
};

struct ExecutionContext;

using HelperFn =
    std::function<sim::Task<HelperResult>(ExecutionContext&, const std::array<std::uint64_t, 5>&)>;

class HelperTable {
 public:
  // False when the id is already present (DuplicateHelperId).
  bool register_helper(HelperSignature sig, HelperFn fn);

  const HelperSignature* find(std::uint32_t id) const;
  const HelperFn* find_fn(std::uint32_t id) const;
  std::vector<std::uint32_t> ids() const;

 private:
  struct Entry {
    HelperSignature sig;
    HelperFn fn;
  };
  std::map<std::uint32_t, Entry> entries_;
};

// Registers the pure standard helpers (packet_len, emit, time_now_ns) plus
// caller-supplied hooks for the environment-bound ones. Null hooks skip the
// corresponding registration.
struct StandardHelperHooks {
  HelperFn block_read;   // id 1
  HelperFn block_write;  // id 2
  HelperFn kv_route;     // id 6
  std::function<std::uint64_t()> time_now;  // id 5; default returns 0
};

void register_standard_helpers(HelperTable& table, StandardHelperHooks hooks = {});

// Single-use program execution state. Stack and window start zeroed.
struct ExecutionContext {
  std::span<std::uint8_t> packet;
  std::array<std::uint8_t, kStackSize> stack{};
  std::array<std::uint8_t, kWindowSize> window{};
  std::vector<std::uint8_t> emitted;
  const HelperTable* helpers = nullptr;
  std::uint64_t fuel = 0;

  // Guest address -> host pointer; nullptr when the access does not lie
  // entirely within one region.
  std::uint8_t* mem(std::uint64_t addr, std::uint64_t size) {
    if (size == 0 || size > kWindowSize) return nullptr;
    if (addr >= kStackTop - kStackSize && addr + size <= kStackTop) {
      return stack.data() + (addr - (kStackTop - kStackSize));
    }
    if (addr >= kStackTop && addr + size <= kStackTop + kWindowSize) {
      return window.data() + (addr - kStackTop);
    }
    if (addr >= kPacketBase && addr + size <= kPacketBase + packet.size()) {
      return packet.data() + (addr - kPacketBase);
    }
    return nullptr;
  }
};

}  // namespace hyperion::bpf
