// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/bytecode.hpp"

#include <algorithm>

#include "evmtaint/hex.hpp"
#include "evmtaint/keccak.hpp"

namespace evmtaint {

Bytecode Bytecode::from_hex(std::string_view hex, Source source) {
    return Bytecode{hex_decode(hex), source};
}

std::string Bytecode::hex() const {
    return hex_encode(bytes);
}

std::vector<Instruction> disassemble(const Bytecode& code) {
    std::vector<Instruction> out;
    const auto& bytes = code.bytes;
    uint32_t offset = 0;
    while (offset < bytes.size()) {
        const uint8_t raw = bytes[offset];
        const OpcodeInfo& info = opcode_info(raw);

        Instruction insn;
        insn.offset = offset;
        insn.raw = raw;
        insn.op = info.known ? static_cast<Opcode>(raw) : Opcode::INVALID;

        if (info.immediate_size > 0) {
            const uint32_t width = info.immediate_size;
            const uint32_t present =
                std::min<uint32_t>(width, static_cast<uint32_t>(bytes.size()) - offset - 1);
            insn.push_data.assign(width, 0);
            std::copy_n(bytes.begin() + offset + 1, present, insn.push_data.begin());
            insn.push_present = static_cast<uint8_t>(present);
            insn.truncated = present < width;
        }
        offset += insn.encoded_size();
        out.push_back(std::move(insn));
    }
    return out;
}

std::vector<uint8_t> encode(const std::vector<Instruction>& instructions) {
    std::vector<uint8_t> out;
    for (const auto& insn : instructions) {
        out.push_back(insn.raw);
        out.insert(out.end(), insn.push_data.begin(), insn.push_data.begin() + insn.push_present);
    }
    return out;
}

std::set<uint32_t> jumpdest_positions(const Bytecode& code) {
    std::set<uint32_t> out;
    for (const auto& insn : disassemble(code))
        if (insn.op == Opcode::JUMPDEST) out.insert(insn.offset);
    return out;
}

Selector Selector::from_u32(uint32_t v) {
    Selector s;
    s.value = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
               static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    return s;
}

std::optional<Selector> Selector::from_hex(std::string_view hex) {
    if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X'))
        hex.remove_prefix(2);
    if (hex.size() != 8) return std::nullopt;
    Selector s;
    for (int i = 0; i < 4; ++i) {
        const int hi = hex_digit(hex[2 * i]);
        const int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        s.value[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return s;
}

uint32_t Selector::as_u32() const {
    return static_cast<uint32_t>(value[0]) << 24 | static_cast<uint32_t>(value[1]) << 16 |
           static_cast<uint32_t>(value[2]) << 8 | value[3];
}

std::string Selector::hex() const {
    return hex_encode(value);
}

namespace {

bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto head = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
    };
    if (!head(s[0])) return false;
    for (const char c : s.substr(1))
        if (!head(c) && !(c >= '0' && c <= '9')) return false;
    return true;
}

// Canonical ABI signature: identifier, then a balanced parenthesized
// type list with no spaces and no empty components.
void validate_signature(std::string_view sig) {
    const auto open = sig.find('(');
    if (open == std::string_view::npos || sig.back() != ')')
        throw Error("malformed signature (missing parameter list): " + std::string(sig));
    if (!valid_identifier(sig.substr(0, open)))
        throw Error("malformed signature (bad function name): " + std::string(sig));

    int depth = 0;
    bool component_empty = true;
    for (size_t i = open; i < sig.size(); ++i) {
        const char c = sig[i];
        if (c == ' ' || c == '\t')
            throw Error("malformed signature (contains spaces): " + std::string(sig));
        if (c == '(') {
            ++depth;
            component_empty = true;
        } else if (c == ')') {
            --depth;
            if (depth < 0) throw Error("malformed signature (unbalanced parens): " + std::string(sig));
            if (depth == 0 && i != sig.size() - 1)
                throw Error("malformed signature (trailing characters): " + std::string(sig));
            // "f()" is fine; "f(,)" or "f(uint256,)" is not.
            if (component_empty && sig[i - 1] == ',')
                throw Error("malformed signature (empty type): " + std::string(sig));
            component_empty = false;
        } else if (c == ',') {
            if (component_empty)
                throw Error("malformed signature (empty type): " + std::string(sig));
            component_empty = true;
        } else {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                            (c >= '0' && c <= '9') || c == '[' || c == ']' || c == '_' || c == '$';
            if (!ok) throw Error("malformed signature (bad character): " + std::string(sig));
            component_empty = false;
        }
    }
    if (depth != 0) throw Error("malformed signature (unbalanced parens): " + std::string(sig));
}

}  // namespace

Selector selector_of(std::string_view text_signature) {
    validate_signature(text_signature);
    const auto digest = keccak256(text_signature);
    Selector s;
    std::copy_n(digest.begin(), 4, s.value.begin());
    s.text = std::string(text_signature);
    return s;
}

}  // namespace evmtaint
