// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evmtaint/opcode.hpp"
#include "evmtaint/word.hpp"

namespace evmtaint {

/// Raw contract code, stored verbatim.
struct Bytecode {
    enum class Source { Rpc, Fixture, Inline };

    std::vector<uint8_t> bytes;
    Source source = Source::Inline;

    static Bytecode from_hex(std::string_view hex, Source source = Source::Inline);
    std::string hex() const;
    bool empty() const { return bytes.empty(); }
};

/// One decoded instruction. Unknown opcode bytes decode as INVALID with
/// length 1; the original byte is kept so the stream re-encodes exactly.
struct Instruction {
    uint32_t offset = 0;
    Opcode op = Opcode::STOP;
    uint8_t raw = 0;
    std::vector<uint8_t> push_data;  // zero-padded to the full push width
    uint8_t push_present = 0;        // immediate bytes actually present in code
    bool truncated = false;          // push ran past end-of-code

    uint32_t encoded_size() const { return 1u + push_present; }
    bool is_push() const { return evmtaint::is_push(op); }

    /// Immediate as a word. Bytes past end-of-code read as zero, matching
    /// the implicit zero padding the EVM applies to code.
    Word push_value() const { return Word::from_bytes(push_data); }
};

/// Decodes the full byte stream. Total: consumes every byte exactly once,
/// never fails.
std::vector<Instruction> disassemble(const Bytecode& code);

/// Re-encodes a decoded stream; inverse of disassemble up to truncated-push
/// zero padding.
std::vector<uint8_t> encode(const std::vector<Instruction>& instructions);

/// Offsets of JUMPDEST opcodes that are instruction starts. Bytes inside
/// push immediates do not count.
std::set<uint32_t> jumpdest_positions(const Bytecode& code);

/// 4-byte function identifier.
struct Selector {
    std::array<uint8_t, 4> value{};
    std::optional<std::string> text;

    static Selector from_u32(uint32_t v);
    static std::optional<Selector> from_hex(std::string_view hex);  // exactly 8 hex digits

    uint32_t as_u32() const;
    std::string hex() const;  // 0x + 8 lowercase digits

    // Identity is the 4-byte value; text is annotation only.
    friend bool operator==(const Selector& a, const Selector& b) { return a.value == b.value; }
    friend auto operator<=>(const Selector& a, const Selector& b) { return a.value <=> b.value; }
};

/// First 4 bytes of Keccak-256 of a canonical ABI signature, e.g.
/// "balanceOf(address)". Rejects signatures with spaces, a missing or
/// unbalanced parameter list, or a malformed function name.
Selector selector_of(std::string_view text_signature);

}  // namespace evmtaint
