// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperion/bpf/verifier.hpp"

namespace hyperion::pipeline {

enum class DepKind : std::uint8_t { kRaw, kWar, kWaw, kControl };

const char* dep_kind_name(DepKind k);

struct DepEdge {
  std::uint32_t from = 0;  // node indices; from < to
  std::uint32_t to = 0;
  DepKind kind = DepKind::kRaw;
};

// Location bitmask: bits 0..10 = registers, then stack, packet, helper world.
inline constexpr std::uint32_t kLocStack = 1u << 11;
inline constexpr std::uint32_t kLocPacket = 1u << 12;
inline constexpr std::uint32_t kLocHelper = 1u << 13;

struct DependencyGraph {
  // One node per instruction (lddw counts once). slot_of_node maps back to
  // the program's slot array.
  std::vector<std::uint32_t> slot_of_node;
  std::vector<std::uint32_t> read_set;   // location bitmasks
  std::vector<std::uint32_t> write_set;
  std::vector<std::uint32_t> node_weight;
  std::vector<DepEdge> edges;            // data edges within blocks + control edges
  std::vector<std::pair<std::uint32_t, std::uint32_t>> blocks;  // [begin, end) node ranges

  std::size_t node_count() const { return slot_of_node.size(); }
};

struct PipelinePlan {
  std::uint32_t lane_width = 4;
  std::vector<std::vector<std::uint32_t>> stages;  // node indices per stage
};

struct ResourceCost {
  std::uint32_t stage_count = 0;
  std::uint64_t logic_units = 0;
  std::uint32_t budget = 0;
  bool fits = false;
};

inline constexpr std::uint32_t kDefaultLaneWidth = 4;
inline constexpr std::uint32_t kDefaultSlotBudget = 256;

// Per-instruction logic weight: ALU/lddw 1, memory/helper 4, branch/exit 2.
std::uint32_t insn_weight(const bpf::Insn& in);

// Pairwise Bernstein conditions within each basic block; helper calls order
// through the helper-world location. Control edges serialize block layout
// order.
DependencyGraph analyze_dependencies(const bpf::VerifiedProgram& vp);

// Greedy list schedule in program order: each instruction lands in the
// earliest stage after all its predecessors with a free lane. Blocks occupy
// disjoint stage ranges.
PipelinePlan schedule(const DependencyGraph& g, std::uint32_t lane_width = kDefaultLaneWidth);

ResourceCost cost(const PipelinePlan& plan, const DependencyGraph& g,
                  std::uint32_t budget = kDefaultSlotBudget);

std::string to_text(const bpf::VerifiedProgram& vp, const DependencyGraph& g,
                    const PipelinePlan& plan, const ResourceCost& c);
std::string to_dot(const bpf::VerifiedProgram& vp, const DependencyGraph& g,
                   const PipelinePlan& plan);

}  // namespace hyperion::pipeline
