// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/cfg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "evmtaint/fold.hpp"

namespace evmtaint {

const char* terminator_name(Terminator t) noexcept {
    switch (t) {
        case Terminator::Jump: return "jump";
        case Terminator::Jumpi: return "jumpi";
        case Terminator::Fallthrough: return "fallthrough";
        case Terminator::Return: return "return";
        case Terminator::Revert: return "revert";
        case Terminator::Stop: return "stop";
        case Terminator::Selfdestruct: return "selfdestruct";
        case Terminator::Invalid: return "invalid";
    }
    return "?";
}

std::optional<uint32_t> Cfg::block_starting_at(uint32_t offset) const {
    const auto it = std::partition_point(
        blocks.begin(), blocks.end(),
        [offset](const BasicBlock& b) { return b.start_offset < offset; });
    if (it == blocks.end() || it->start_offset != offset) return std::nullopt;
    return it->id;
}

std::vector<uint32_t> Cfg::successors(uint32_t block) const {
    std::vector<uint32_t> out;
    for (auto it = edges.lower_bound(Edge{block, 0, EdgeKind::Taken});
         it != edges.end() && it->from == block; ++it)
        if (it->kind != EdgeKind::Unresolved) out.push_back(it->to);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string Cfg::dump() const {
    std::ostringstream os;
    for (const auto& b : blocks) {
        os << b.id << " [" << b.start_offset << "," << b.end_offset << ") "
           << terminator_name(b.terminator) << " ->";
        for (auto it = edges.lower_bound(Edge{b.id, 0, EdgeKind::Taken});
             it != edges.end() && it->from == b.id; ++it) {
            if (it->kind == EdgeKind::Unresolved)
                os << " ?";
            else
                os << " " << it->to;
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Abstract stack interpretation: constants ⊔ unknown.

namespace {

constexpr size_t kStackCap = 1024;  // EVM stack limit
constexpr int kVisitBound = 64;

struct AbsVal {
    bool known = false;
    Word value{};

    friend bool operator==(const AbsVal&, const AbsVal&) = default;
};

// back() is the top of the stack. Popping past the bottom yields unknown,
// so partial stacks (function bodies entered mid-analysis) stay analyzable.
struct AbsStack {
    std::vector<AbsVal> vals;

    friend bool operator==(const AbsStack&, const AbsStack&) = default;

    AbsVal pop() {
        if (vals.empty()) return {};
        AbsVal v = vals.back();
        vals.pop_back();
        return v;
    }
    void push(AbsVal v) {
        vals.push_back(v);
        if (vals.size() > kStackCap) vals.erase(vals.begin());
    }
    void push_known(const Word& w) { push({true, w}); }
    void push_unknown() { push({}); }
};

AbsVal fold(Opcode op, const std::vector<AbsVal>& in, uint32_t instr_offset) {
    if (op == Opcode::PC) return {true, Word(instr_offset)};
    std::vector<Word> words;
    words.reserve(in.size());
    for (const auto& v : in) {
        if (!v.known) return {};
        words.push_back(v.value);
    }
    if (auto w = fold_constant(op, words)) return {true, *w};
    return {};
}

struct BlockExit {
    AbsStack stack;               // stack flowing to successors
    std::optional<AbsVal> jump_target;  // present iff block ends in JUMP/JUMPI
};

BlockExit exec_block(const Cfg& cfg, const BasicBlock& block, AbsStack stack) {
    BlockExit exit;
    for (const auto& ins : cfg.block_instructions(block)) {
        if (ins.is_push()) {
            stack.push_known(ins.push_value());
            continue;
        }
        const uint8_t raw = ins.raw;
        if (raw >= 0x80 && raw <= 0x8f) {  // DUPn
            const size_t n = raw - 0x80 + 1;
            stack.push(n <= stack.vals.size() ? stack.vals[stack.vals.size() - n] : AbsVal{});
            continue;
        }
        if (raw >= 0x90 && raw <= 0x9f) {  // SWAPn
            const size_t n = raw - 0x90 + 1;
            while (stack.vals.size() < n + 1) stack.vals.insert(stack.vals.begin(), AbsVal{});
            std::swap(stack.vals.back(), stack.vals[stack.vals.size() - 1 - n]);
            continue;
        }
        if (ins.op == Opcode::JUMP || ins.op == Opcode::JUMPI) {
            exit.jump_target = stack.pop();
            if (ins.op == Opcode::JUMPI) stack.pop();  // condition
            break;  // always the last instruction of the block
        }
        const OpcodeInfo& info = opcode_info(ins.op);
        std::vector<AbsVal> in(info.pops);
        for (auto& v : in) v = stack.pop();
        if (info.pushes == 1) stack.push(fold(ins.op, in, ins.offset));
    }
    exit.stack = std::move(stack);
    return exit;
}

// Meet of two stacks, aligned at the top; entries below the common depth are
// dropped, disagreeing constants become unknown.
AbsStack merge_stacks(const AbsStack& a, const AbsStack& b) {
    const size_t n = std::min(a.vals.size(), b.vals.size());
    AbsStack out;
    out.vals.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const AbsVal& va = a.vals[a.vals.size() - n + i];
        const AbsVal& vb = b.vals[b.vals.size() - n + i];
        out.vals[i] = (va.known && vb.known && va.value == vb.value) ? va : AbsVal{};
    }
    return out;
}

// Target block id if `target` is a constant pointing at a JUMPDEST block
// start; nullopt otherwise (with `illegal` set when it is constant but not a
// legal destination).
std::optional<uint32_t> legal_target(const Cfg& cfg, const AbsVal& target, bool& illegal) {
    illegal = false;
    if (!target.known) return std::nullopt;
    if (!target.value.fits_u64() || target.value.low_u64() > UINT32_MAX) {
        illegal = true;
        return std::nullopt;
    }
    const auto blk = cfg.block_starting_at(static_cast<uint32_t>(target.value.low_u64()));
    if (!blk || cfg.instructions[cfg.blocks[*blk].first_instr].op != Opcode::JUMPDEST) {
        illegal = true;
        return std::nullopt;
    }
    return blk;
}

bool has_taken_edge(const Cfg& cfg, uint32_t from) {
    for (auto it = cfg.edges.lower_bound(Edge{from, 0, EdgeKind::Taken});
         it != cfg.edges.end() && it->from == from; ++it)
        if (it->kind == EdgeKind::Taken) return true;
    return false;
}

}  // namespace

Cfg build_cfg(const std::vector<Instruction>& instructions) {
    Cfg cfg;
    cfg.instructions = instructions;
    if (instructions.empty()) return cfg;

    // Leaders as instruction indices.
    std::set<uint32_t> leaders{0};
    for (uint32_t i = 0; i < instructions.size(); ++i) {
        const auto& ins = instructions[i];
        if (ins.op == Opcode::JUMPDEST) leaders.insert(i);
        if ((opcode_info(ins.op).terminator || ins.op == Opcode::JUMPI) &&
            i + 1 < instructions.size())
            leaders.insert(i + 1);
    }

    for (auto it = leaders.begin(); it != leaders.end(); ++it) {
        const uint32_t first = *it;
        const uint32_t next = std::next(it) == leaders.end()
                                  ? static_cast<uint32_t>(instructions.size())
                                  : *std::next(it);
        BasicBlock b;
        b.id = static_cast<uint32_t>(cfg.blocks.size());
        b.first_instr = first;
        b.instr_count = next - first;
        b.start_offset = instructions[first].offset;
        const auto& last = instructions[next - 1];
        b.end_offset = last.offset + last.encoded_size();
        switch (last.op) {
            case Opcode::JUMP: b.terminator = Terminator::Jump; break;
            case Opcode::JUMPI: b.terminator = Terminator::Jumpi; break;
            case Opcode::RETURN: b.terminator = Terminator::Return; break;
            case Opcode::REVERT: b.terminator = Terminator::Revert; break;
            case Opcode::STOP: b.terminator = Terminator::Stop; break;
            case Opcode::SELFDESTRUCT: b.terminator = Terminator::Selfdestruct; break;
            case Opcode::INVALID: b.terminator = Terminator::Invalid; break;
            default: b.terminator = Terminator::Fallthrough; break;
        }
        cfg.blocks.push_back(b);
    }

    std::set<uint32_t> illegal_sites;
    for (const auto& b : cfg.blocks) {
        const bool falls =
            b.terminator == Terminator::Fallthrough || b.terminator == Terminator::Jumpi;
        if (falls && b.id + 1 < cfg.blocks.size())
            cfg.edges.insert({b.id, b.id + 1, EdgeKind::Fallthrough});

        if (b.terminator != Terminator::Jump && b.terminator != Terminator::Jumpi) continue;
        // Block-local resolution: run on an empty stack; pops beyond the
        // bottom read as unknown.
        const BlockExit exit = exec_block(cfg, b, {});
        bool illegal = false;
        const auto target = exit.jump_target ? legal_target(cfg, *exit.jump_target, illegal)
                                             : std::nullopt;
        if (target)
            cfg.edges.insert({b.id, *target, EdgeKind::Taken});
        else
            cfg.edges.insert({b.id, kNoBlock, EdgeKind::Unresolved});
        if (illegal) illegal_sites.insert(b.id);
    }

    cfg.diagnostics.illegal_const_targets = static_cast<uint32_t>(illegal_sites.size());
    uint32_t unresolved = 0;
    for (const auto& b : cfg.blocks)
        if ((b.terminator == Terminator::Jump || b.terminator == Terminator::Jumpi) &&
            !has_taken_edge(cfg, b.id))
            ++unresolved;
    cfg.diagnostics.unresolved_jumps = unresolved;
    return cfg;
}

Cfg resolve_jumps(Cfg cfg) {
    if (cfg.blocks.empty()) return cfg;

    // Diagnostics describe this pass, not the history of passes.
    cfg.diagnostics.visit_bound_hits = 0;

    std::map<uint32_t, AbsStack> entry_stacks;
    std::vector<int> visits(cfg.blocks.size(), 0);
    std::deque<uint32_t> work;
    std::set<uint32_t> queued;
    std::set<uint32_t> illegal_sites;

    entry_stacks.emplace(cfg.entry, AbsStack{});
    work.push_back(cfg.entry);
    queued.insert(cfg.entry);

    while (!work.empty()) {
        const uint32_t bid = work.front();
        work.pop_front();
        queued.erase(bid);
        if (++visits[bid] > kVisitBound) {
            ++cfg.diagnostics.visit_bound_hits;
            continue;
        }
        const BasicBlock& b = cfg.blocks[bid];
        const BlockExit exit = exec_block(cfg, b, entry_stacks.at(bid));

        std::set<uint32_t> succs;
        if (exit.jump_target) {
            bool illegal = false;
            if (const auto target = legal_target(cfg, *exit.jump_target, illegal)) {
                cfg.edges.insert({bid, *target, EdgeKind::Taken});
                succs.insert(*target);
            }
            if (illegal) illegal_sites.insert(bid);
        }
        // Sticky edges from earlier rounds (and fallthrough successors)
        // keep receiving the current stack.
        for (const uint32_t s : cfg.successors(bid)) succs.insert(s);

        for (const uint32_t s : succs) {
            const auto it = entry_stacks.find(s);
            bool changed;
            if (it == entry_stacks.end()) {
                entry_stacks.emplace(s, exit.stack);
                changed = true;
            } else {
                AbsStack merged = merge_stacks(it->second, exit.stack);
                changed = !(merged == it->second);
                if (changed) it->second = std::move(merged);
            }
            if (changed && queued.insert(s).second) work.push_back(s);
        }
    }

    // A jump site with at least one resolved target no longer carries the
    // unresolved marker; sites never lose taken edges.
    uint32_t unresolved = 0;
    for (const auto& b : cfg.blocks) {
        if (b.terminator != Terminator::Jump && b.terminator != Terminator::Jumpi) continue;
        if (has_taken_edge(cfg, b.id))
            cfg.edges.erase({b.id, kNoBlock, EdgeKind::Unresolved});
        else {
            cfg.edges.insert({b.id, kNoBlock, EdgeKind::Unresolved});
            ++unresolved;
        }
    }
    cfg.diagnostics.unresolved_jumps = unresolved;
    cfg.diagnostics.illegal_const_targets =
        std::max<uint32_t>(cfg.diagnostics.illegal_const_targets,
                           static_cast<uint32_t>(illegal_sites.size()));
    return cfg;
}

// ---------------------------------------------------------------------------
// Dispatcher recovery

namespace {

// PUSH4 k ... EQ ... terminal JUMPI within one block. Returns k.
std::optional<uint32_t> dispatch_selector(const Cfg& cfg, const BasicBlock& b) {
    if (b.terminator != Terminator::Jumpi) return std::nullopt;
    const auto ins = cfg.block_instructions(b);
    for (size_t i = 0; i < ins.size(); ++i) {
        if (ins[i].op != Opcode::PUSH4) continue;
        for (size_t j = i + 1; j < ins.size(); ++j)
            if (ins[j].op == Opcode::EQ)
                return static_cast<uint32_t>(ins[i].push_value().low_u64());
    }
    return std::nullopt;
}

// CALLDATALOAD plus a 4-byte extraction idiom (SHR by 224 or DIV by 2^224)
// somewhere in the region.
bool has_selector_extraction(const Cfg& cfg, const std::set<uint32_t>& region) {
    const Word shift224(224);
    const Word div_const = shl(shift224, Word(1));  // 2^224
    bool calldataload = false, idiom = false;
    for (const uint32_t bid : region) {
        const auto ins = cfg.block_instructions(cfg.blocks[bid]);
        for (size_t i = 0; i < ins.size(); ++i) {
            if (ins[i].op == Opcode::CALLDATALOAD) calldataload = true;
            if (!ins[i].is_push()) continue;
            const Word v = ins[i].push_value();
            for (size_t j = i + 1; j < ins.size() && !idiom; ++j) {
                if (ins[j].op == Opcode::SHR && v == shift224) idiom = true;
                if (ins[j].op == Opcode::DIV && v == div_const) idiom = true;
            }
        }
    }
    return calldataload && idiom;
}

std::optional<uint32_t> taken_target(const Cfg& cfg, uint32_t from) {
    for (auto it = cfg.edges.lower_bound(Edge{from, 0, EdgeKind::Taken});
         it != cfg.edges.end() && it->from == from; ++it)
        if (it->kind == EdgeKind::Taken) return it->to;
    return std::nullopt;
}

std::set<uint32_t> reachable_from(const Cfg& cfg, uint32_t start,
                                  const std::set<uint32_t>& skip) {
    std::set<uint32_t> seen;
    std::deque<uint32_t> work{start};
    while (!work.empty()) {
        const uint32_t b = work.front();
        work.pop_front();
        if (!seen.insert(b).second) continue;
        for (const uint32_t s : cfg.successors(b))
            if (!skip.count(s)) work.push_back(s);
    }
    return seen;
}

}  // namespace

std::vector<PublicFunction> extract_public_functions(const Cfg& cfg) {
    if (cfg.blocks.empty()) return {};

    // Walk the entry region. Fallthrough edges are always followed; taken
    // edges only from blocks that did not match a dispatch comparison (their
    // taken edge enters a function body).
    constexpr size_t kRegionCap = 256;
    std::set<uint32_t> region;
    std::set<uint32_t> matched;
    std::map<uint32_t, uint32_t> dispatch;  // selector -> entry block
    std::deque<uint32_t> work{cfg.entry};
    while (!work.empty() && region.size() < kRegionCap) {
        const uint32_t bid = work.front();
        work.pop_front();
        if (!region.insert(bid).second) continue;
        const BasicBlock& b = cfg.blocks[bid];

        bool is_match = false;
        if (const auto sel = dispatch_selector(cfg, b)) {
            if (const auto target = taken_target(cfg, bid)) {
                dispatch.emplace(*sel, *target);
                matched.insert(bid);
                is_match = true;
            }
        }
        for (auto it = cfg.edges.lower_bound(Edge{bid, 0, EdgeKind::Taken});
             it != cfg.edges.end() && it->from == bid; ++it) {
            if (it->kind == EdgeKind::Fallthrough ||
                (it->kind == EdgeKind::Taken && !is_match))
                work.push_back(it->to);
        }
    }

    std::vector<PublicFunction> out;
    if (dispatch.empty() || !has_selector_extraction(cfg, region)) {
        PublicFunction fallback;
        fallback.selector = Selector::from_u32(0);
        fallback.entry_block = cfg.entry;
        for (const auto& b : cfg.blocks) fallback.reachable_blocks.insert(b.id);
        out.push_back(std::move(fallback));
        return out;
    }

    // The dispatcher itself: comparison blocks plus the prologue chain that
    // reaches them without entering a function body.
    std::set<uint32_t> dispatcher = matched;
    {
        std::deque<uint32_t> w{cfg.entry};
        std::set<uint32_t> seen;
        while (!w.empty()) {
            const uint32_t bid = w.front();
            w.pop_front();
            if (!seen.insert(bid).second || !region.count(bid)) continue;
            dispatcher.insert(bid);
            for (auto it = cfg.edges.lower_bound(Edge{bid, 0, EdgeKind::Taken});
                 it != cfg.edges.end() && it->from == bid; ++it)
                if (it->kind == EdgeKind::Fallthrough) w.push_back(it->to);
        }
    }

    for (const auto& [sel, entry_block] : dispatch) {
        PublicFunction f;
        f.selector = Selector::from_u32(sel);
        f.entry_block = entry_block;
        f.reachable_blocks = reachable_from(cfg, entry_block, dispatcher);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace evmtaint
