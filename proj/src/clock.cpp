// SPDX-License-Identifier: Apache-2.0
#include "hyperion/sim/clock.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace hyperion::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t wall_now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

}  // namespace

SimClock::EventId SimClock::schedule(std::uint64_t delay_ns, EventFn fn) {
  if (delay_ns > cfg_.time_budget_ns || now_ > cfg_.time_budget_ns - delay_ns) {
    throw TimeBudgetExceeded(now_);
  }
  std::uint64_t seq = next_seq_++;
  heap_.push_back(Ev{now_ + delay_ns, seq, std::move(fn)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return seq;
}

SimClock::Ev SimClock::pop() {
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Ev ev = std::move(heap_.back());
  heap_.pop_back();
  return ev;
}

bool SimClock::step() {
  if (heap_.empty()) return false;
  Ev ev = pop();
  now_ = ev.at;  // heap order guarantees ev.at >= now_
  ev.fn();
  return true;
}

void SimClock::run() {
  while (!heap_.empty()) {
    if (cfg_.realtime) pace(heap_.front().at);
    step();
  }
}

void SimClock::pace(SimTime at) {
  std::uint64_t wall = wall_now_ns();
  if (!wall_epoch_set_) {
    wall_epoch_set_ = true;
    wall_epoch_ns_ = wall > now_ ? wall - now_ : 0;
  }
  std::uint64_t target =
      wall_epoch_ns_ +
      static_cast<std::uint64_t>(static_cast<double>(at) * cfg_.realtime_scale);
  if (target > wall) {
    std::this_thread::sleep_for(std::chrono::nanoseconds(target - wall));
  }
}

Rng& SimClock::stream(std::uint32_t id) {
  auto it = streams_.find(id);
  if (it == streams_.end()) {
    std::uint64_t derived = splitmix64(cfg_.seed ^ (0xA24BAED4963EE407ull * (id + 1)));
    it = streams_.emplace(id, Rng(derived)).first;
  }
  return it->second;
}

}  // namespace hyperion::sim
