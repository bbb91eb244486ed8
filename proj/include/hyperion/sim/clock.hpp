// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace hyperion::sim {

// Virtual nanoseconds since daemon start.
using SimTime = std::uint64_t;

constexpr std::uint64_t us_to_ns(double us) {
  return static_cast<std::uint64_t>(us * 1000.0 + 0.5);
}

// Deterministic RNG stream. Raw draws come from std::mt19937_64, which is
// fully specified by the standard; derived values are hand-rolled so results
// do not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform over [lo, hi], both ends inclusive.
  std::uint64_t uniform_inclusive(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo;
    if (span == UINT64_MAX) return next_u64();
    return lo + next_u64() % (span + 1);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
};

enum class LatencyDistribution : std::uint8_t { kUniform, kFixedMin, kFixedMax };

// Parameterized latency model: one network RTT plus an NVMe service-time
// range. Optional read/write overrides narrow the base range per direction.
struct LatencyModel {
  std::uint64_t net_rtt_ns = 1000;
  std::uint64_t nvme_min_ns = 5000;
  std::uint64_t nvme_max_ns = 8000;
  std::uint64_t read_min_ns = 0;  // 0 = use base range
  std::uint64_t read_max_ns = 0;
  std::uint64_t write_min_ns = 0;
  std::uint64_t write_max_ns = 0;
  LatencyDistribution distribution = LatencyDistribution::kUniform;

  void validate() const {
    if (net_rtt_ns == 0 || nvme_min_ns == 0) {
      throw std::invalid_argument("latency durations must be > 0");
    }
    if (nvme_min_ns > nvme_max_ns) {
      throw std::invalid_argument("nvme_min must be <= nvme_max");
    }
    if (read_min_ns > read_max_ns || write_min_ns > write_max_ns) {
      throw std::invalid_argument("latency override min must be <= max");
    }
  }

  std::uint64_t sample_range(Rng& rng, std::uint64_t lo, std::uint64_t hi) const {
    switch (distribution) {
      case LatencyDistribution::kFixedMin: return lo;
      case LatencyDistribution::kFixedMax: return hi;
      case LatencyDistribution::kUniform: break;
    }
    return rng.uniform_inclusive(lo, hi);
  }

  std::uint64_t sample_nvme(Rng& rng) const {
    return sample_range(rng, nvme_min_ns, nvme_max_ns);
  }
  std::uint64_t sample_nvme_read(Rng& rng) const {
    if (read_max_ns != 0) return sample_range(rng, read_min_ns, read_max_ns);
    return sample_nvme(rng);
  }
  std::uint64_t sample_nvme_write(Rng& rng) const {
    if (write_max_ns != 0) return sample_range(rng, write_min_ns, write_max_ns);
    return sample_nvme(rng);
  }
};

class TimeBudgetExceeded : public std::runtime_error {
 public:
  explicit TimeBudgetExceeded(std::uint64_t at_ns)
      : std::runtime_error("virtual time budget exceeded at " +
                           std::to_string(at_ns) + " ns") {}
};

// Deterministic discrete-event core. Events fire in (time, sequence) order;
// the sequence number breaks ties FIFO. Everything that mutates simulated
// state runs inside an event handler on the single dispatch thread.
class SimClock {
 public:
  using EventFn = std::function<void()>;
  using EventId = std::uint64_t;

  static constexpr std::uint64_t kDefaultBudgetNs = 1'000'000'000'000'000'000ull;

  struct Config {
    std::uint64_t seed = 1;
    bool realtime = false;
    double realtime_scale = 1.0;  // wall seconds per virtual second
    std::uint64_t time_budget_ns = kDefaultBudgetNs;
  };

  SimClock() : SimClock(Config{}) {}
  explicit SimClock(Config cfg) : cfg_(cfg) {}

  SimTime now() const { return now_; }
  const Config& config() const { return cfg_; }
  std::uint64_t seed() const { return cfg_.seed; }

  EventId schedule(std::uint64_t delay_ns, EventFn fn);

  bool idle() const { return heap_.empty(); }
  std::size_t pending() const { return heap_.size(); }

  // Dispatches the next pending event. Returns false when the queue is empty.
  bool step();

  // Drains the queue. In realtime mode each event is paced against the wall
  // clock before dispatch.
  void run();

  // Lazily created deterministic RNG stream, derived from the master seed.
  Rng& stream(std::uint32_t id);

 private:
  struct Ev {
    SimTime at;
    std::uint64_t seq;
    EventFn fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  Ev pop();
  void pace(SimTime at);

  Config cfg_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<Ev> heap_;
  std::map<std::uint32_t, Rng> streams_;
  bool wall_epoch_set_ = false;
  std::uint64_t wall_epoch_ns_ = 0;
};

}  // namespace hyperion::sim
