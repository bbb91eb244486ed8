// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hyperion::wire {

inline constexpr std::uint32_t kMagic = 0x48595052;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::size_t kMaxPayload = 8192;

// Response payload trailer (16 bytes) appended when a request sets
// kReservedTimestampFlag: server-side received_ns and completed_ns.
inline constexpr std::uint8_t kReservedTimestampFlag = 0x01;
inline constexpr std::size_t kTimestampTrailerSize = 16;

enum class Opcode : std::uint8_t {
  kGet = 0x01,
  kPut = 0x02,
  kDel = 0x03,
  kRawDispatch = 0x04,
  kLoadProg = 0x10,
  kCreateSlot = 0x11,
  kDeleteSlot = 0x12,
  kStats = 0x20,
  kErrorResp = 0x7F,
};

enum class Status : std::uint8_t {
  kOk = 0,
  kNotFound = 1,
  kAuthFailed = 2,
  kSlotBusy = 3,
  kTrap = 4,
  kBadRequest = 5,
  kUnknownOpcode = 6,
  kUnknownSlot = 7,
  kNoCapacity = 8,
  kVerifierError = 9,
};

const char* status_name(Status s);
bool opcode_known(std::uint8_t op);

// Wire unit. Header layout (little-endian, 24 bytes):
//   off 0  u32 magic        0x48595052
//   off 4  u8  version      1
//   off 5  u8  opcode
//   off 6  u16 tenant_id
//   off 8  u16 slot_id
//   off 10 u8  status       0 in requests
//   off 11 u8  reserved     flag bits (bit 0: request server timestamps)
//   off 12 u64 request_id   echoed verbatim in responses
//   off 20 u32 payload_len  <= 8192
struct Message {
  std::uint8_t opcode = 0;
  std::uint16_t tenant_id = 0;
  std::uint16_t slot_id = 0;
  std::uint8_t status = 0;
  std::uint8_t reserved = 0;
  std::uint64_t request_id = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Message&) const = default;

  bool wants_timestamps() const { return (reserved & kReservedTimestampFlag) != 0; }
};

std::vector<std::uint8_t> encode(const Message& m);

struct DecodeResult {
  bool ok = false;
  // When !ok: true if enough header survived to answer with BadRequest
  // (magic and request_id recoverable), false if the datagram must be dropped.
  bool recoverable = false;
  std::string detail;
  Message msg;
};

DecodeResult decode(std::span<const std::uint8_t> bytes);

// Little-endian scalar helpers shared by the codecs and block layouts.
inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  return static_cast<std::uint64_t>(get_u32(p)) |
         (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}
inline void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
inline void put_u32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}
inline void put_u64(std::uint8_t* p, std::uint64_t v) {
  put_u32(p, static_cast<std::uint32_t>(v));
  put_u32(p + 4, static_cast<std::uint32_t>(v >> 32));
}

}  // namespace hyperion::wire
