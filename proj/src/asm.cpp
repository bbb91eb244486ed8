// SPDX-License-Identifier: Apache-2.0
#include "hyperion/bpf/asm.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace hyperion::bpf {

namespace {

struct Line {
  std::size_t number = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
  std::size_t slot = 0;  // first slot index of the emitted instruction
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 0);
  if (errno != 0 || end != s.c_str() + s.size()) {
    // large unsigned hex constants (lddw) overflow strtoll; retry unsigned
    errno = 0;
    unsigned long long u = std::strtoull(s.c_str(), &end, 0);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = static_cast<std::int64_t>(u);
    return true;
  }
  out = v;
  return true;
}

bool parse_reg(const std::string& s, std::uint8_t& out) {
  if (s.size() < 2 || s[0] != 'r') return false;
  std::int64_t v;
  if (!parse_int(s.substr(1), v)) return false;
  if (v < 0 || v > 10) return false;
  out = static_cast<std::uint8_t>(v);
  return true;
}

// [rN], [rN+off], [rN-off]
bool parse_mem(const std::string& s, std::uint8_t& reg, std::int16_t& off) {
  if (s.size() < 4 || s.front() != '[' || s.back() != ']') return false;
  std::string body = s.substr(1, s.size() - 2);
  std::size_t pos = body.find_first_of("+-", 1);
  std::string reg_part = body.substr(0, pos);
  if (!parse_reg(trim(reg_part), reg)) return false;
  if (pos == std::string::npos) {
    off = 0;
    return true;
  }
  std::int64_t v;
  if (!parse_int(trim(body.substr(pos)), v)) return false;
  if (v < INT16_MIN || v > INT16_MAX) return false;
  off = static_cast<std::int16_t>(v);
  return true;
}

const std::map<std::string, std::uint8_t> kAluOps = {
    {"add", kAluAdd}, {"sub", kAluSub},   {"mul", kAluMul}, {"div", kAluDiv},
    {"or", kAluOr},   {"and", kAluAnd},   {"lsh", kAluLsh}, {"rsh", kAluRsh},
    {"neg", kAluNeg}, {"mod", kAluMod},   {"xor", kAluXor}, {"mov", kAluMov},
    {"arsh", kAluArsh},
};

const std::map<std::string, std::uint8_t> kJmpOps = {
    {"jeq", kJmpJeq},   {"jgt", kJmpJgt},   {"jge", kJmpJge},   {"jset", kJmpJset},
    {"jne", kJmpJne},   {"jsgt", kJmpJsgt}, {"jsge", kJmpJsge}, {"jlt", kJmpJlt},
    {"jle", kJmpJle},   {"jslt", kJmpJslt}, {"jsle", kJmpJsle},
};

const std::map<std::string, std::uint8_t> kSizes = {
    {"b", kSizeB}, {"h", kSizeH}, {"w", kSizeW}, {"dw", kSizeDw}};

std::optional<std::uint8_t> split_width_suffix(std::string& name) {
  if (name.size() > 2 && name.compare(name.size() - 2, 2, "64") == 0) {
    name.resize(name.size() - 2);
    return kClassAlu64;
  }
  if (name.size() > 2 && name.compare(name.size() - 2, 2, "32") == 0) {
    name.resize(name.size() - 2);
    return kClassAlu32;
  }
  return std::nullopt;
}

}  // namespace

AsmResult assemble(const std::string& text, std::string name) {
  AsmResult res;
  res.program.name = std::move(name);
  std::map<std::string, std::size_t> labels;
  std::vector<Line> lines;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  std::size_t slot = 0;
  auto err = [&res](std::size_t n, const std::string& msg) {
    res.error = "line " + std::to_string(n) + ": " + msg;
    return res;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    std::size_t c = raw.find_first_of(";#");
    std::string s = trim(c == std::string::npos ? raw : raw.substr(0, c));
    if (s.empty()) continue;
    if (s.back() == ':') {
      std::string lab = trim(s.substr(0, s.size() - 1));
      if (lab.empty() || labels.count(lab)) return err(lineno, "bad or duplicate label");
      labels[lab] = slot;
      continue;
    }
    Line ln;
    ln.number = lineno;
    ln.slot = slot;
    std::size_t sp = s.find_first_of(" \t");
    ln.mnemonic = s.substr(0, sp);
    if (sp != std::string::npos) {
      std::string rest = s.substr(sp);
      std::string cur;
      for (char ch : rest) {
        if (ch == ',') {
          cur = trim(cur);
          if (!cur.empty()) ln.operands.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      cur = trim(cur);
      if (!cur.empty()) ln.operands.push_back(cur);
    }
    slot += (ln.mnemonic == "lddw") ? 2 : 1;
    lines.push_back(std::move(ln));
  }

  auto resolve_target = [&](const Line& ln, const std::string& t, std::int16_t& off) {
    if (!t.empty() && (t[0] == '+' || t[0] == '-')) {
      std::int64_t v;
      if (!parse_int(t, v) || v < INT16_MIN || v > INT16_MAX) return false;
      off = static_cast<std::int16_t>(v);
      return true;
    }
    auto it = labels.find(t);
    if (it == labels.end()) return false;
    std::int64_t rel = static_cast<std::int64_t>(it->second) -
                       (static_cast<std::int64_t>(ln.slot) + 1);
    if (rel < INT16_MIN || rel > INT16_MAX) return false;
    off = static_cast<std::int16_t>(rel);
    return true;
  };

  for (const Line& ln : lines) {
    std::string m = ln.mnemonic;
    const auto& ops = ln.operands;
    Insn insn;

    if (m == "exit") {
      if (!ops.empty()) return err(ln.number, "exit takes no operands");
      insn.opcode = kClassJmp | kJmpExit;
      res.program.insns.push_back(insn);
      continue;
    }
    if (m == "call") {
      std::int64_t id;
      if (ops.size() != 1 || !parse_int(ops[0], id)) return err(ln.number, "call <helper-id>");
      insn.opcode = kClassJmp | kJmpCall;
      insn.imm = static_cast<std::int32_t>(id);
      res.program.insns.push_back(insn);
      continue;
    }
    if (m == "ja") {
      if (ops.size() != 1 || !resolve_target(ln, ops[0], insn.off)) {
        return err(ln.number, "ja <label|+N|-N>");
      }
      insn.opcode = kClassJmp | kJmpJa;
      res.program.insns.push_back(insn);
      continue;
    }
    if (m == "lddw") {
      std::int64_t v;
      if (ops.size() != 2 || !parse_reg(ops[0], insn.dst) || !parse_int(ops[1], v)) {
        return err(ln.number, "lddw rN, imm64");
      }
      insn.opcode = kOpLddw;
      std::uint64_t u = static_cast<std::uint64_t>(v);
      insn.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(u));
      res.program.insns.push_back(insn);
      Insn hi;
      hi.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(u >> 32));
      res.program.insns.push_back(hi);
      continue;
    }
    if ((m.size() == 4 && (m.substr(0, 2) == "le" || m.substr(0, 2) == "be")) ||
        (m.size() == 4 && (m == "le64" || m == "be64"))) {
      std::string width = m.substr(2);
      if ((width == "16" || width == "32" || width == "64") && ops.size() == 1) {
        if (!parse_reg(ops[0], insn.dst)) return err(ln.number, "byte swap needs a register");
        insn.opcode = static_cast<std::uint8_t>(kClassAlu32 | kAluEnd |
                                                (m[0] == 'b' ? kSrcX : kSrcK));
        insn.imm = std::stoi(width);
        res.program.insns.push_back(insn);
        continue;
      }
    }
    if (m.size() >= 4 && m.compare(0, 3, "ldx") == 0) {
      auto sz = kSizes.find(m.substr(3));
      if (sz == kSizes.end()) return err(ln.number, "unknown load size");
      if (ops.size() != 2 || !parse_reg(ops[0], insn.dst) ||
          !parse_mem(ops[1], insn.src, insn.off)) {
        return err(ln.number, "ldx* rN, [rM+off]");
      }
      insn.opcode = static_cast<std::uint8_t>(kClassLdx | sz->second | kModeMem);
      res.program.insns.push_back(insn);
      continue;
    }
    if (m.size() >= 4 && m.compare(0, 3, "stx") == 0) {
      auto sz = kSizes.find(m.substr(3));
      if (sz == kSizes.end()) return err(ln.number, "unknown store size");
      if (ops.size() != 2 || !parse_mem(ops[0], insn.dst, insn.off) ||
          !parse_reg(ops[1], insn.src)) {
        return err(ln.number, "stx* [rN+off], rM");
      }
      insn.opcode = static_cast<std::uint8_t>(kClassStx | sz->second | kModeMem);
      res.program.insns.push_back(insn);
      continue;
    }
    if (m.size() >= 3 && m[0] == 's' && m[1] == 't' && kSizes.count(m.substr(2))) {
      std::int64_t v;
      if (ops.size() != 2 || !parse_mem(ops[0], insn.dst, insn.off) || !parse_int(ops[1], v) ||
          v < INT32_MIN || v > INT32_MAX) {
        return err(ln.number, "st* [rN+off], imm");
      }
      insn.opcode = static_cast<std::uint8_t>(kClassSt | kSizes.at(m.substr(2)) | kModeMem);
      insn.imm = static_cast<std::int32_t>(v);
      res.program.insns.push_back(insn);
      continue;
    }

    // conditional jumps, with optional 32-bit suffix
    {
      std::string base = m;
      std::uint8_t cls = kClassJmp;
      if (base.size() > 2 && base.compare(base.size() - 2, 2, "32") == 0) {
        base.resize(base.size() - 2);
        cls = kClassJmp32;
      }
      auto it = kJmpOps.find(base);
      if (it != kJmpOps.end()) {
        if (ops.size() != 3 || !parse_reg(ops[0], insn.dst)) {
          return err(ln.number, "j* rN, <rM|imm>, <target>");
        }
        std::uint8_t src_reg;
        std::int64_t v;
        if (parse_reg(ops[1], src_reg)) {
          insn.src = src_reg;
          insn.opcode = static_cast<std::uint8_t>(cls | it->second | kSrcX);
        } else if (parse_int(ops[1], v) && v >= INT32_MIN && v <= INT32_MAX) {
          insn.imm = static_cast<std::int32_t>(v);
          insn.opcode = static_cast<std::uint8_t>(cls | it->second | kSrcK);
        } else {
          return err(ln.number, "bad jump operand");
        }
        if (!resolve_target(ln, ops[2], insn.off)) return err(ln.number, "bad jump target");
        res.program.insns.push_back(insn);
        continue;
      }
    }

    // ALU with mandatory width suffix
    {
      std::string base = m;
      auto cls = split_width_suffix(base);
      auto it = kAluOps.find(base);
      if (cls && it != kAluOps.end()) {
        if (it->second == kAluNeg) {
          if (ops.size() != 1 || !parse_reg(ops[0], insn.dst)) {
            return err(ln.number, "neg needs one register");
          }
          insn.opcode = static_cast<std::uint8_t>(*cls | kAluNeg);
          res.program.insns.push_back(insn);
          continue;
        }
        if (ops.size() != 2 || !parse_reg(ops[0], insn.dst)) {
          return err(ln.number, "alu op needs rN, <rM|imm>");
        }
        std::uint8_t src_reg;
        std::int64_t v;
        if (parse_reg(ops[1], src_reg)) {
          insn.src = src_reg;
          insn.opcode = static_cast<std::uint8_t>(*cls | it->second | kSrcX);
        } else if (parse_int(ops[1], v) && v >= INT32_MIN && v <= INT32_MAX) {
          insn.imm = static_cast<std::int32_t>(v);
          insn.opcode = static_cast<std::uint8_t>(*cls | it->second | kSrcK);
        } else {
          return err(ln.number, "bad alu operand");
        }
        res.program.insns.push_back(insn);
        continue;
      }
    }

    return err(ln.number, "unknown mnemonic '" + m + "'");
  }

  res.ok = true;
  return res;
}

namespace {

std::string reg(std::uint8_t r) { return "r" + std::to_string(r); }

std::string mem(std::uint8_t r, std::int16_t off) {
  std::string s = "[r" + std::to_string(r);
  if (off > 0) s += "+" + std::to_string(off);
  if (off < 0) s += std::to_string(off);
  return s + "]";
}

std::string size_suffix(std::uint8_t bits) {
  switch (bits) {
    case kSizeB: return "b";
    case kSizeH: return "h";
    case kSizeW: return "w";
    default: return "dw";
  }
}

std::string rel(std::int16_t off) {
  return off >= 0 ? "+" + std::to_string(off) : std::to_string(off);
}

const char* alu_name(std::uint8_t op) {
  switch (op) {
    case kAluAdd: return "add";
    case kAluSub: return "sub";
    case kAluMul: return "mul";
    case kAluDiv: return "div";
    case kAluOr: return "or";
    case kAluAnd: return "and";
    case kAluLsh: return "lsh";
    case kAluRsh: return "rsh";
    case kAluNeg: return "neg";
    case kAluMod: return "mod";
    case kAluXor: return "xor";
    case kAluMov: return "mov";
    case kAluArsh: return "arsh";
    default: return "?";
  }
}

const char* jmp_name(std::uint8_t op) {
  switch (op) {
    case kJmpJeq: return "jeq";
    case kJmpJgt: return "jgt";
    case kJmpJge: return "jge";
    case kJmpJset: return "jset";
    case kJmpJne: return "jne";
    case kJmpJsgt: return "jsgt";
    case kJmpJsge: return "jsge";
    case kJmpJlt: return "jlt";
    case kJmpJle: return "jle";
    case kJmpJslt: return "jslt";
    case kJmpJsle: return "jsle";
    default: return "?";
  }
}

}  // namespace

std::string disassemble(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.insns.size(); ++i) {
    const Insn& in = p.insns[i];
    std::string line;
    switch (in.cls()) {
      case kClassAlu64:
      case kClassAlu32: {
        std::string w = in.cls() == kClassAlu64 ? "64" : "32";
        if (in.alu_op() == kAluEnd) {
          line = std::string(in.is_reg_src() ? "be" : "le") + std::to_string(in.imm) + " " +
                 reg(in.dst);
        } else if (in.alu_op() == kAluNeg) {
          line = std::string("neg") + w + " " + reg(in.dst);
        } else {
          line = std::string(alu_name(in.alu_op())) + w + " " + reg(in.dst) + ", " +
                 (in.is_reg_src() ? reg(in.src) : std::to_string(in.imm));
        }
        break;
      }
      case kClassJmp:
      case kClassJmp32: {
        if (in.opcode == (kClassJmp | kJmpExit)) {
          line = "exit";
        } else if (in.opcode == (kClassJmp | kJmpCall)) {
          line = "call " + std::to_string(in.imm);
        } else if (in.opcode == (kClassJmp | kJmpJa)) {
          line = "ja " + rel(in.off);
        } else {
          line = std::string(jmp_name(in.alu_op())) + (in.cls() == kClassJmp32 ? "32" : "") +
                 " " + reg(in.dst) + ", " +
                 (in.is_reg_src() ? reg(in.src) : std::to_string(in.imm)) + ", " + rel(in.off);
        }
        break;
      }
      case kClassLdx:
        line = "ldx" + size_suffix(in.mem_size()) + " " + reg(in.dst) + ", " +
               mem(in.src, in.off);
        break;
      case kClassStx:
        line = "stx" + size_suffix(in.mem_size()) + " " + mem(in.dst, in.off) + ", " +
               reg(in.src);
        break;
      case kClassSt:
        line = "st" + size_suffix(in.mem_size()) + " " + mem(in.dst, in.off) + ", " +
               std::to_string(in.imm);
        break;
      case kClassLd: {
        std::uint64_t v = p.imm64_at(i);
        line = "lddw " + reg(in.dst) + ", 0x";
        char buf[17];
        std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
        line += buf;
        ++i;  // skip the second slot
        break;
      }
      default:
        line = "?";
    }
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace hyperion::bpf
