// SPDX-License-Identifier: Apache-2.0
#include "hyperion/pipeline/compiler.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hyperion/bpf/asm.hpp"

namespace hyperion::pipeline {

using bpf::Insn;

const char* dep_kind_name(DepKind k) {
  switch (k) {
    case DepKind::kRaw: return "RAW";
    case DepKind::kWar: return "WAR";
    case DepKind::kWaw: return "WAW";
    case DepKind::kControl: return "control";
  }
  return "?";
}

std::uint32_t insn_weight(const Insn& in) {
  switch (in.cls()) {
    case bpf::kClassAlu64:
    case bpf::kClassAlu32:
    case bpf::kClassLd:
      return 1;
    case bpf::kClassLdx:
    case bpf::kClassSt:
    case bpf::kClassStx:
      return 4;
    case bpf::kClassJmp:
    case bpf::kClassJmp32:
      return in.alu_op() == bpf::kJmpCall ? 4 : 2;
  }
  return 1;
}

namespace {

constexpr std::uint32_t reg_bit(std::uint8_t r) { return 1u << r; }
constexpr std::uint32_t kLocAllMem = kLocStack | kLocPacket;

struct RwSets {
  std::uint32_t read = 0;
  std::uint32_t write = 0;
};

RwSets rw_sets(const Insn& in) {
  RwSets s;
  switch (in.cls()) {
    case bpf::kClassAlu64:
    case bpf::kClassAlu32: {
      std::uint8_t op = in.alu_op();
      s.write = reg_bit(in.dst);
      if (op == bpf::kAluMov) {
        if (in.is_reg_src()) s.read = reg_bit(in.src);
      } else if (op == bpf::kAluNeg || op == bpf::kAluEnd) {
        s.read = reg_bit(in.dst);
      } else {
        s.read = reg_bit(in.dst);
        if (in.is_reg_src()) s.read |= reg_bit(in.src);
      }
      break;
    }
    case bpf::kClassLd:
      s.write = reg_bit(in.dst);
      break;
    case bpf::kClassLdx:
      // The pointed-to region is not tracked per access; loads may touch
      // either memory region.
      s.read = reg_bit(in.src) | kLocAllMem;
      s.write = reg_bit(in.dst);
      break;
    case bpf::kClassSt:
      s.read = reg_bit(in.dst);
      s.write = kLocAllMem;
      break;
    case bpf::kClassStx:
      s.read = reg_bit(in.dst) | reg_bit(in.src);
      s.write = kLocAllMem;
      break;
    case bpf::kClassJmp:
    case bpf::kClassJmp32: {
      std::uint8_t op = in.alu_op();
      if (op == bpf::kJmpExit) {
        s.read = reg_bit(0);
      } else if (op == bpf::kJmpCall) {
        s.read = reg_bit(1) | reg_bit(2) | reg_bit(3) | reg_bit(4) | reg_bit(5) |
                 kLocHelper | kLocAllMem;
        s.write = reg_bit(0) | reg_bit(1) | reg_bit(2) | reg_bit(3) | reg_bit(4) |
                  reg_bit(5) | kLocHelper | kLocAllMem;
      } else if (op != bpf::kJmpJa) {
        s.read = reg_bit(in.dst);
        if (in.is_reg_src()) s.read |= reg_bit(in.src);
      }
      break;
    }
  }
  return s;
}

bool is_block_terminator(const Insn& in) {
  if (in.cls() != bpf::kClassJmp && in.cls() != bpf::kClassJmp32) return false;
  std::uint8_t op = in.alu_op();
  return op != bpf::kJmpCall;  // ja, exit, and conditional jumps end a block
}

}  // namespace

DependencyGraph analyze_dependencies(const bpf::VerifiedProgram& vp) {
  const auto& insns = vp.program.insns;
  DependencyGraph g;

  // node table, skipping lddw second slots
  std::vector<std::int32_t> node_of_slot(insns.size(), -1);
  for (std::size_t i = 0; i < insns.size(); ++i) {
    node_of_slot[i] = static_cast<std::int32_t>(g.slot_of_node.size());
    g.slot_of_node.push_back(static_cast<std::uint32_t>(i));
    RwSets s = rw_sets(insns[i]);
    g.read_set.push_back(s.read);
    g.write_set.push_back(s.write);
    g.node_weight.push_back(insn_weight(insns[i]));
    if (insns[i].is_wide()) ++i;
  }

  // block leaders: slot 0, jump targets, instruction after a terminator
  std::set<std::uint32_t> leader_slots;
  leader_slots.insert(0);
  for (std::size_t i = 0; i < insns.size(); ++i) {
    const Insn& in = insns[i];
    if (is_block_terminator(in)) {
      std::size_t next = i + 1;
      if (next < insns.size()) leader_slots.insert(static_cast<std::uint32_t>(next));
      if (in.alu_op() != bpf::kJmpExit) {
        std::int64_t t = static_cast<std::int64_t>(i) + 1 + in.off;
        if (t >= 0 && t < static_cast<std::int64_t>(insns.size())) {
          leader_slots.insert(static_cast<std::uint32_t>(t));
        }
      }
    }
    if (in.is_wide()) ++i;
  }

  std::vector<std::uint32_t> leaders;
  for (std::uint32_t s : leader_slots) {
    if (node_of_slot[s] >= 0) leaders.push_back(static_cast<std::uint32_t>(node_of_slot[s]));
  }
  std::sort(leaders.begin(), leaders.end());
  leaders.erase(std::unique(leaders.begin(), leaders.end()), leaders.end());

  for (std::size_t b = 0; b < leaders.size(); ++b) {
    std::uint32_t begin = leaders[b];
    std::uint32_t end = (b + 1 < leaders.size()) ? leaders[b + 1]
                                                 : static_cast<std::uint32_t>(g.node_count());
    g.blocks.emplace_back(begin, end);
  }

  // Bernstein conditions within each block
  for (auto [begin, end] : g.blocks) {
    for (std::uint32_t j = begin; j < end; ++j) {
      for (std::uint32_t i = begin; i < j; ++i) {
        std::uint32_t raw = g.write_set[i] & g.read_set[j];
        std::uint32_t waw = g.write_set[i] & g.write_set[j];
        std::uint32_t war = g.read_set[i] & g.write_set[j];
        if (raw) {
          g.edges.push_back({i, j, DepKind::kRaw});
        } else if (war) {
          g.edges.push_back({i, j, DepKind::kWar});
        } else if (waw) {
          g.edges.push_back({i, j, DepKind::kWaw});
        }
      }
    }
  }

  // control edges serialize consecutive blocks in layout order
  for (std::size_t b = 0; b + 1 < g.blocks.size(); ++b) {
    if (g.blocks[b].first == g.blocks[b].second) continue;
    g.edges.push_back({g.blocks[b].second - 1, g.blocks[b + 1].first, DepKind::kControl});
  }

  return g;
}

PipelinePlan schedule(const DependencyGraph& g, std::uint32_t lane_width) {
  PipelinePlan plan;
  plan.lane_width = lane_width == 0 ? 1 : lane_width;

  std::vector<std::vector<std::uint32_t>> preds(g.node_count());
  for (const DepEdge& e : g.edges) {
    if (e.kind != DepKind::kControl) preds[e.to].push_back(e.from);
  }

  std::vector<std::uint32_t> stage_of(g.node_count(), 0);
  for (auto [begin, end] : g.blocks) {
    if (begin == end) continue;
    std::uint32_t block_base = static_cast<std::uint32_t>(plan.stages.size());
    for (std::uint32_t n = begin; n < end; ++n) {
      std::uint32_t earliest = block_base;
      for (std::uint32_t p : preds[n]) {
        earliest = std::max(earliest, stage_of[p] + 1);
      }
      while (true) {
        if (earliest >= plan.stages.size()) plan.stages.resize(earliest + 1);
        if (plan.stages[earliest].size() < plan.lane_width) break;
        ++earliest;
      }
      plan.stages[earliest].push_back(n);
      stage_of[n] = earliest;
    }
    // the next block's stages start after every stage this block used
  }
  return plan;
}

ResourceCost cost(const PipelinePlan& plan, const DependencyGraph& g, std::uint32_t budget) {
  ResourceCost c;
  c.stage_count = static_cast<std::uint32_t>(plan.stages.size());
  c.budget = budget;
  for (std::uint32_t w : g.node_weight) c.logic_units += w;
  c.fits = c.logic_units <= budget;
  return c;
}

std::string to_text(const bpf::VerifiedProgram& vp, const DependencyGraph& g,
                    const PipelinePlan& plan, const ResourceCost& c) {
  std::ostringstream os;
  std::vector<std::string> lines;
  {
    std::istringstream dis(bpf::disassemble(vp.program));
    std::string ln;
    std::vector<std::string> per_slot;
    while (std::getline(dis, ln)) per_slot.push_back(ln);
    // per_slot is per instruction (disassemble skips wide second slots)
    lines = std::move(per_slot);
  }
  os << "program: " << vp.program.name << "\n";
  os << "stages: " << c.stage_count << "  logic_units: " << c.logic_units
     << "  lane_width: " << plan.lane_width << "  budget: " << c.budget
     << "  fits: " << (c.fits ? "yes" : "no") << "\n";
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    os << "  stage " << s << ":";
    for (std::uint32_t n : plan.stages[s]) {
      os << "  [" << g.slot_of_node[n] << "] "
         << (n < lines.size() ? lines[n] : std::string("?"));
    }
    os << "\n";
  }
  return os.str();
}

std::string to_dot(const bpf::VerifiedProgram& vp, const DependencyGraph& g,
                   const PipelinePlan& plan) {
  std::vector<std::uint32_t> stage_of(g.node_count(), 0);
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    for (std::uint32_t n : plan.stages[s]) stage_of[n] = static_cast<std::uint32_t>(s);
  }
  std::vector<std::string> lines;
  {
    std::istringstream dis(bpf::disassemble(vp.program));
    std::string ln;
    while (std::getline(dis, ln)) lines.push_back(ln);
  }
  std::ostringstream os;
  os << "digraph pipeline {\n  rankdir=TB;\n  node [shape=box, fontname=monospace];\n";
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    os << "  n" << n << " [label=\"" << (n < lines.size() ? lines[n] : "?") << "\\nstage "
       << stage_of[n] << "\"];\n";
  }
  for (const DepEdge& e : g.edges) {
    const char* color = e.kind == DepKind::kRaw     ? "black"
                        : e.kind == DepKind::kWar   ? "blue"
                        : e.kind == DepKind::kWaw   ? "orange"
                                                    : "gray";
    os << "  n" << e.from << " -> n" << e.to << " [color=" << color << ", label=\""
       << dep_kind_name(e.kind) << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace hyperion::pipeline
