// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "evmtaint/bytecode.hpp"

namespace evmtaint {

enum class Terminator : uint8_t {
    Jump,
    Jumpi,
    Fallthrough,  // block ends because the next offset starts a new block
    Return,
    Revert,
    Stop,
    Selfdestruct,
    Invalid,
};

const char* terminator_name(Terminator t) noexcept;

/// Half-open instruction slice [first_instr, first_instr + instr_count) of
/// the owning Cfg's decoded stream, covering bytes
/// [start_offset, end_offset).
struct BasicBlock {
    uint32_t id = 0;
    uint32_t start_offset = 0;
    uint32_t end_offset = 0;
    uint32_t first_instr = 0;
    uint32_t instr_count = 0;
    Terminator terminator = Terminator::Fallthrough;
};

enum class EdgeKind : uint8_t { Taken, Fallthrough, Unresolved };

/// Marker target for edges whose destination is not (yet) known.
inline constexpr uint32_t kNoBlock = UINT32_MAX;

struct Edge {
    uint32_t from = 0;
    uint32_t to = kNoBlock;
    EdgeKind kind = EdgeKind::Unresolved;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct CfgDiagnostics {
    uint32_t unresolved_jumps = 0;       // jump sites with no resolved taken edge
    uint32_t illegal_const_targets = 0;  // constant targets that are not JUMPDEST starts
    uint32_t visit_bound_hits = 0;       // blocks whose re-analysis bound was exhausted
};

/// Control flow graph over one contract's decoded instruction stream. Block
/// ids are indices into `blocks`, which is sorted by start offset; the entry
/// block starts at offset 0.
struct Cfg {
    std::vector<Instruction> instructions;
    std::vector<BasicBlock> blocks;
    std::set<Edge> edges;
    uint32_t entry = 0;
    CfgDiagnostics diagnostics;

    std::span<const Instruction> block_instructions(const BasicBlock& b) const {
        return {instructions.data() + b.first_instr, b.instr_count};
    }
    /// Block whose start_offset equals `offset`, if any.
    std::optional<uint32_t> block_starting_at(uint32_t offset) const;
    std::vector<uint32_t> successors(uint32_t block) const;  // resolved edges only

    /// One block per line: id, byte range, terminator, successor ids
    /// ("?" for an unresolved jump).
    std::string dump() const;
};

/// Partitions the stream into basic blocks (leaders: offset 0, every
/// JUMPDEST, every instruction after a block terminator or JUMPI) and adds
/// edges. Jump targets that are block-local constants resolve immediately;
/// the rest are marked unresolved. Total: any byte string yields a Cfg.
Cfg build_cfg(const std::vector<Instruction>& instructions);

/// Propagates a constant ⊔ unknown abstract stack across the whole graph to
/// a fixpoint (bounded at 64 visits per block, stack depth capped at the EVM
/// limit of 1024), adding taken edges for targets that become constant.
/// Never removes an edge; running it again at fixpoint changes nothing.
Cfg resolve_jumps(Cfg cfg);

/// Externally callable function recovered from the selector dispatcher.
struct PublicFunction {
    Selector selector;
    uint32_t entry_block = 0;
    std::set<uint32_t> reachable_blocks;  // from entry_block, dispatcher excluded
};

/// Matches dispatcher comparisons (CALLDATALOAD with a SHR-224 or
/// DIV-2^224 extraction, then PUSH4/EQ/JUMPI chains) in the entry region.
/// Bytecode with no dispatcher yields one synthetic function with selector
/// 0x00000000 covering every block; empty bytecode yields none. Results are
/// sorted by selector.
std::vector<PublicFunction> extract_public_functions(const Cfg& cfg);

}  // namespace evmtaint
