// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperion/sim/clock.hpp"
#include "hyperion/sim/task.hpp"

namespace hyperion::nvme {

inline constexpr std::size_t kBlockSize = 4096;

// RNG stream ids on the shared clock.
inline constexpr std::uint32_t kNvmeRngStream = 1;

struct DeviceConfig {
  std::uint32_t device_count = 4;
  std::uint64_t capacity_blocks = 4096;
  std::uint32_t queue_depth = 16;
  std::string backing_prefix;  // empty = memory backing, else file:<prefix>
  bool access_log = false;

  void validate() const {
    if (device_count < 1 || capacity_blocks < 1 || queue_depth < 1) {
      throw std::invalid_argument("nvme config: counts must be >= 1");
    }
  }
};

struct BlockAddress {
  std::uint32_t device = 0;
  std::uint64_t lba = 0;
};

enum class CommandKind : std::uint8_t { kRead, kWrite };
enum class SubmitError : std::uint8_t { kNone, kQueueFull, kAddressOutOfRange };

struct Completion {
  std::uint64_t tag = 0;
  CommandKind kind = CommandKind::kRead;
  sim::SimTime completed_at = 0;
  std::vector<std::uint8_t> data;  // read payload
};

// Origin tag recorded in the access log; slots use their slot id.
inline constexpr std::uint32_t kAdminOrigin = 0xFFFFFFFFu;

struct AccessRecord {
  sim::SimTime at = 0;
  std::uint32_t device = 0;
  std::uint64_t lba = 0;
  bool write = false;
  std::uint32_t origin = kAdminOrigin;
};

class AddressOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Simulated NVMe subsystem: device_count block devices, each with a bounded
// command queue. Service time is drawn from the latency model; writes apply
// and reads capture data at completion time.
class NvmeSubsystem {
 public:
  NvmeSubsystem(sim::SimClock& clock, DeviceConfig cfg, sim::LatencyModel lat);

  struct SubmitResult {
    SubmitError err = SubmitError::kNone;
    std::uint64_t tag = 0;
  };

  // Queue-depth-checked submission; completions are drained via completions().
  SubmitResult submit_read(BlockAddress addr, std::uint32_t origin = kAdminOrigin);
  SubmitResult submit_write(BlockAddress addr, std::span<const std::uint8_t> data,
                            std::uint32_t origin = kAdminOrigin);

  // Drains finished commands for one device, ordered by (completion_time, tag).
  std::vector<Completion> completions(std::uint32_t device);

  // Synchronous-in-virtual-time block IO. Waits for queue admission when the
  // device is at queue depth (FIFO), then for the sampled service time.
  sim::Task<void> read_block(BlockAddress addr, std::span<std::uint8_t> out,
                             std::uint32_t origin = kAdminOrigin);
  sim::Task<void> write_block(BlockAddress addr, std::span<const std::uint8_t> data,
                              std::uint32_t origin = kAdminOrigin);

  // Direct store access bypassing the latency model (admin and test paths).
  std::span<const std::uint8_t> peek(BlockAddress addr) const;
  void poke(BlockAddress addr, std::span<const std::uint8_t> data);

  struct Counters {
    std::uint64_t submitted = 0;
    std::uint64_t completed = 0;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
  };

  std::uint32_t inflight(std::uint32_t device) const { return dev(device).inflight; }
  Counters counters(std::uint32_t device) const { return dev(device).counters; }
  const DeviceConfig& config() const { return cfg_; }
  const sim::LatencyModel& latency() const { return lat_; }

  void set_access_log_enabled(bool on) { log_enabled_ = on; }
  const std::vector<AccessRecord>& access_log() const { return log_; }
  void clear_access_log() { log_.clear(); }
  std::uint64_t dropped_log_records() const { return 0; }

  // Persists device images when file-backed; no-op for memory backing.
  void flush();

 private:
  struct Device {
    std::vector<std::uint8_t> bytes;
    std::uint32_t inflight = 0;
    std::deque<std::coroutine_handle<>> waiters;
    std::vector<Completion> done;
    Counters counters;
  };

  struct Admission {
    NvmeSubsystem& sys;
    Device& d;
    bool await_ready() const noexcept {
      return d.inflight < sys.cfg_.queue_depth && d.waiters.empty();
    }
    void await_suspend(std::coroutine_handle<> h) { d.waiters.push_back(h); }
    void await_resume() const noexcept {}
  };

  struct ResumeAfter {
    sim::SimClock& clock;
    std::uint64_t delay_ns;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) {
      clock.schedule(delay_ns, [h] { h.resume(); });
    }
    void await_resume() const noexcept {}
  };

  Device& dev(std::uint32_t i) {
    if (i >= devices_.size()) throw AddressOutOfRange("device index out of range");
    return devices_[i];
  }
  const Device& dev(std::uint32_t i) const {
    if (i >= devices_.size()) throw AddressOutOfRange("device index out of range");
    return devices_[i];
  }

  bool in_range(BlockAddress a) const {
    return a.device < cfg_.device_count && a.lba < cfg_.capacity_blocks;
  }
  std::uint8_t* block_ptr(BlockAddress a) {
    return devices_[a.device].bytes.data() + a.lba * kBlockSize;
  }
  void record(BlockAddress a, bool write, std::uint32_t origin) {
    if (log_enabled_) log_.push_back({clock_.now(), a.device, a.lba, write, origin});
  }
  void finish(Device& d);
  std::string image_path(std::uint32_t device) const;

  sim::SimClock& clock_;
  DeviceConfig cfg_;
  sim::LatencyModel lat_;
  std::vector<Device> devices_;
  std::uint64_t next_tag_ = 1;
  bool log_enabled_ = false;
  std::vector<AccessRecord> log_;
};

}  // namespace hyperion::nvme
