// SPDX-License-Identifier: Apache-2.0
#include "hyperion/wire/message.hpp"

namespace hyperion::wire {

const char* status_name(Status s) {
  switch (s) {
    case Status::kOk: return "OK";
    case Status::kNotFound: return "NotFound";
    case Status::kAuthFailed: return "AuthFailed";
    case Status::kSlotBusy: return "SlotBusy";
    case Status::kTrap: return "Trap";
    case Status::kBadRequest: return "BadRequest";
    case Status::kUnknownOpcode: return "UnknownOpcode";
    case Status::kUnknownSlot: return "UnknownSlot";
    case Status::kNoCapacity: return "NoCapacity";
    case Status::kVerifierError: return "VerifierError";
  }
  return "Unknown";
}

bool opcode_known(std::uint8_t op) {
  switch (static_cast<Opcode>(op)) {
    case Opcode::kGet:
    case Opcode::kPut:
    case Opcode::kDel:
    case Opcode::kRawDispatch:
    case Opcode::kLoadProg:
    case Opcode::kCreateSlot:
    case Opcode::kDeleteSlot:
    case Opcode::kStats:
    case Opcode::kErrorResp:
      return true;
    default:
      return false;
  }
}

std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out(kHeaderSize + m.payload.size());
  put_u32(&out[0], kMagic);
  out[4] = kVersion;
  out[5] = m.opcode;
  put_u16(&out[6], m.tenant_id);
  put_u16(&out[8], m.slot_id);
  out[10] = m.status;
  out[11] = m.reserved;
  put_u64(&out[12], m.request_id);
  put_u32(&out[20], static_cast<std::uint32_t>(m.payload.size()));
  if (!m.payload.empty()) {
    std::copy(m.payload.begin(), m.payload.end(), out.begin() + kHeaderSize);
  }
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.size() < kHeaderSize) {
    r.detail = "short datagram";
    return r;  // not recoverable: no trustworthy header
  }
  if (get_u32(&bytes[0]) != kMagic) {
    r.detail = "bad magic";
    return r;
  }
  // From here the frame is recognizably ours; errors are answerable.
  r.recoverable = true;
  r.msg.opcode = bytes[5];
  r.msg.tenant_id = get_u16(&bytes[6]);
  r.msg.slot_id = get_u16(&bytes[8]);
  r.msg.status = bytes[10];
  r.msg.reserved = bytes[11];
  r.msg.request_id = get_u64(&bytes[12]);
  if (bytes[4] != kVersion) {
    r.detail = "unsupported version";
    return r;
  }
  std::uint32_t len = get_u32(&bytes[20]);
  if (len > kMaxPayload) {
    r.detail = "payload too large";
    return r;
  }
  if (bytes.size() != kHeaderSize + len) {
    r.detail = "payload length mismatch";
    return r;
  }
  r.msg.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  r.ok = true;
  return r;
}

}  // namespace hyperion::wire
