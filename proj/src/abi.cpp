// SPDX-License-Identifier: Apache-2.0
#include "hyperion/bpf/abi.hpp"

namespace hyperion::bpf {

const char* trap_name(TrapCode t) {
  switch (t) {
    case TrapCode::kNone: return "none";
    case TrapCode::kFuelExhausted: return "FuelExhausted";
    case TrapCode::kDivideByZero: return "DivideByZero";
    case TrapCode::kBadHelperReturn: return "BadHelperReturn";
    case TrapCode::kIsolationFault: return "IsolationFault";
    case TrapCode::kOutOfBounds: return "OutOfBounds";
    case TrapCode::kUnknownHelper: return "UnknownHelper";
  }
  return "?";
}

bool HelperTable::register_helper(HelperSignature sig, HelperFn fn) {
  auto [it, inserted] = entries_.emplace(sig.id, Entry{std::move(sig), std::move(fn)});
  return inserted;
}

const HelperSignature* HelperTable::find(std::uint32_t id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second.sig;
}

const HelperFn* HelperTable::find_fn(std::uint32_t id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second.fn;
}

std::vector<std::uint32_t> HelperTable::ids() const {
  std::vector<std::uint32_t> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

void register_standard_helpers(HelperTable& table, StandardHelperHooks hooks) {
  if (hooks.block_read) {
    table.register_helper(
        {kHelperBlockRead, "block_read",
         {ArgKind::kAny, ArgKind::kAny, ArgKind::kWindowOff, ArgKind::kNone, ArgKind::kNone}},
        std::move(hooks.block_read));
  }
  if (hooks.block_write) {
    table.register_helper(
        {kHelperBlockWrite, "block_write",
         {ArgKind::kAny, ArgKind::kAny, ArgKind::kWindowOff, ArgKind::kNone, ArgKind::kNone}},
        std::move(hooks.block_write));
  }

  table.register_helper(
      {kHelperPacketLen, "packet_len", {}, /*returns_packet_len=*/true},
      [](ExecutionContext& ctx, const std::array<std::uint64_t, 5>&) -> sim::Task<HelperResult> {
        co_return HelperResult{ctx.packet.size(), TrapCode::kNone};
      });

  table.register_helper(
      {kHelperEmit, "emit",
       {ArgKind::kMemOff, ArgKind::kLen, ArgKind::kNone, ArgKind::kNone, ArgKind::kNone}},
      [](ExecutionContext& ctx, const std::array<std::uint64_t, 5>& a) -> sim::Task<HelperResult> {
        std::uint64_t len = a[1];
        if (len > kMaxEmit || ctx.emitted.size() + len > kMaxEmit) {
          co_return HelperResult{0, TrapCode::kOutOfBounds};
        }
        if (len == 0) co_return HelperResult{0, TrapCode::kNone};
        std::uint8_t* p = ctx.mem(kStackTop + a[0], len);
        if (!p) co_return HelperResult{0, TrapCode::kOutOfBounds};
        ctx.emitted.insert(ctx.emitted.end(), p, p + len);
        co_return HelperResult{0, TrapCode::kNone};
      });

  auto time_now = std::move(hooks.time_now);
  table.register_helper(
      {kHelperTimeNowNs, "time_now_ns", {}},
      [time_now](ExecutionContext&, const std::array<std::uint64_t, 5>&) -> sim::Task<HelperResult> {
        co_return HelperResult{time_now ? time_now() : 0, TrapCode::kNone};
      });

  if (hooks.kv_route) {
    table.register_helper(
        {kHelperKvRoute, "kv_route",
         {ArgKind::kAny, ArgKind::kNone, ArgKind::kNone, ArgKind::kNone, ArgKind::kNone}},
        std::move(hooks.kv_route));
  }
}

}  // namespace hyperion::bpf
