// SPDX-License-Identifier: Apache-2.0
#include "hyperion/nvme/device.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace hyperion::nvme {

NvmeSubsystem::NvmeSubsystem(sim::SimClock& clock, DeviceConfig cfg, sim::LatencyModel lat)
    : clock_(clock), cfg_(std::move(cfg)), lat_(lat) {
  cfg_.validate();
  lat_.validate();
  log_enabled_ = cfg_.access_log;
  devices_.resize(cfg_.device_count);
  for (std::uint32_t i = 0; i < cfg_.device_count; ++i) {
    devices_[i].bytes.assign(cfg_.capacity_blocks * kBlockSize, 0);
    if (!cfg_.backing_prefix.empty()) {
      std::ifstream in(image_path(i), std::ios::binary);
      if (in) {
        in.read(reinterpret_cast<char*>(devices_[i].bytes.data()),
                static_cast<std::streamsize>(devices_[i].bytes.size()));
      }
    }
  }
}

std::string NvmeSubsystem::image_path(std::uint32_t device) const {
  return cfg_.backing_prefix + ".dev" + std::to_string(device) + ".img";
}

void NvmeSubsystem::flush() {
  if (cfg_.backing_prefix.empty()) return;
  for (std::uint32_t i = 0; i < cfg_.device_count; ++i) {
    std::ofstream out(image_path(i), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(devices_[i].bytes.data()),
              static_cast<std::streamsize>(devices_[i].bytes.size()));
  }
}

void NvmeSubsystem::finish(Device& d) {
  d.inflight--;
  d.counters.completed++;
  if (!d.waiters.empty()) {
    auto h = d.waiters.front();
    d.waiters.pop_front();
    h.resume();
  }
}

NvmeSubsystem::SubmitResult NvmeSubsystem::submit_read(BlockAddress addr,
                                                       std::uint32_t origin) {
  if (!in_range(addr)) return {SubmitError::kAddressOutOfRange, 0};
  Device& d = devices_[addr.device];
  if (d.inflight >= cfg_.queue_depth) return {SubmitError::kQueueFull, 0};
  d.inflight++;
  d.counters.submitted++;
  d.counters.reads++;
  std::uint64_t tag = next_tag_++;
  std::uint64_t lat = lat_.sample_nvme_read(clock_.stream(kNvmeRngStream));
  clock_.schedule(lat, [this, addr, tag, origin, &d] {
    Completion c;
    c.tag = tag;
    c.kind = CommandKind::kRead;
    c.completed_at = clock_.now();
    c.data.assign(block_ptr(addr), block_ptr(addr) + kBlockSize);
    record(addr, false, origin);
    d.done.push_back(std::move(c));
    finish(d);
  });
  return {SubmitError::kNone, tag};
}

NvmeSubsystem::SubmitResult NvmeSubsystem::submit_write(BlockAddress addr,
                                                        std::span<const std::uint8_t> data,
                                                        std::uint32_t origin) {
  if (!in_range(addr) || data.size() != kBlockSize) {
    return {SubmitError::kAddressOutOfRange, 0};
  }
  Device& d = devices_[addr.device];
  if (d.inflight >= cfg_.queue_depth) return {SubmitError::kQueueFull, 0};
  d.inflight++;
  d.counters.submitted++;
  d.counters.writes++;
  std::uint64_t tag = next_tag_++;
  std::uint64_t lat = lat_.sample_nvme_write(clock_.stream(kNvmeRngStream));
  std::vector<std::uint8_t> payload(data.begin(), data.end());
  clock_.schedule(lat, [this, addr, tag, origin, &d, payload = std::move(payload)] {
    std::memcpy(block_ptr(addr), payload.data(), kBlockSize);
    record(addr, true, origin);
    Completion c;
    c.tag = tag;
    c.kind = CommandKind::kWrite;
    c.completed_at = clock_.now();
    d.done.push_back(std::move(c));
    finish(d);
  });
  return {SubmitError::kNone, tag};
}

std::vector<Completion> NvmeSubsystem::completions(std::uint32_t device) {
  Device& d = dev(device);
  std::vector<Completion> out;
  out.swap(d.done);
  std::sort(out.begin(), out.end(), [](const Completion& a, const Completion& b) {
    if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
    return a.tag < b.tag;
  });
  return out;
}

sim::Task<void> NvmeSubsystem::read_block(BlockAddress addr, std::span<std::uint8_t> out,
                                          std::uint32_t origin) {
  if (!in_range(addr)) throw AddressOutOfRange("nvme read: address out of range");
  if (out.size() != kBlockSize) throw AddressOutOfRange("nvme read: bad buffer size");
  Device& d = devices_[addr.device];
  co_await Admission{*this, d};
  d.inflight++;
  d.counters.submitted++;
  d.counters.reads++;
  std::uint64_t lat = lat_.sample_nvme_read(clock_.stream(kNvmeRngStream));
  co_await ResumeAfter{clock_, lat};
  std::memcpy(out.data(), block_ptr(addr), kBlockSize);
  record(addr, false, origin);
  finish(d);
}

sim::Task<void> NvmeSubsystem::write_block(BlockAddress addr,
                                           std::span<const std::uint8_t> data,
                                           std::uint32_t origin) {
  if (!in_range(addr)) throw AddressOutOfRange("nvme write: address out of range");
  if (data.size() != kBlockSize) throw AddressOutOfRange("nvme write: bad buffer size");
  Device& d = devices_[addr.device];
  co_await Admission{*this, d};
  d.inflight++;
  d.counters.submitted++;
  d.counters.writes++;
  std::uint64_t lat = lat_.sample_nvme_write(clock_.stream(kNvmeRngStream));
  // Capture now so the block content seen by later reads is the completed
  // write even if the caller reuses its buffer while we wait.
  std::vector<std::uint8_t> payload(data.begin(), data.end());
  co_await ResumeAfter{clock_, lat};
  std::memcpy(block_ptr(addr), payload.data(), kBlockSize);
  record(addr, true, origin);
  finish(d);
}

std::span<const std::uint8_t> NvmeSubsystem::peek(BlockAddress addr) const {
  if (!in_range(addr)) throw AddressOutOfRange("nvme peek: address out of range");
  const Device& d = devices_[addr.device];
  return {d.bytes.data() + addr.lba * kBlockSize, kBlockSize};
}

void NvmeSubsystem::poke(BlockAddress addr, std::span<const std::uint8_t> data) {
  if (!in_range(addr) || data.size() != kBlockSize) {
    throw AddressOutOfRange("nvme poke: address out of range");
  }
  std::memcpy(block_ptr(addr), data.data(), kBlockSize);
}

}  // namespace hyperion::nvme
