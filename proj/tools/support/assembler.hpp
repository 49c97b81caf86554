// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evmtaint/error.hpp"
#include "evmtaint/hex.hpp"
#include "evmtaint/opcode.hpp"
#include "evmtaint/word.hpp"

namespace fixture {

/// Tiny EVM assembler for building test subjects: linear emission with
/// two-byte label fixups. Labels always mark a JUMPDEST.
class Asm {
  public:
    Asm& op(evmtaint::Opcode o) {
        code_.push_back(static_cast<uint8_t>(o));
        return *this;
    }

    Asm& raw_byte(uint8_t b) {
        code_.push_back(b);
        return *this;
    }

    /// PUSHn with the minimal width that holds `w` (PUSH1 for zero).
    Asm& push(const evmtaint::Word& w) {
        const auto bytes = w.bytes();
        size_t first = 0;
        while (first < 31 && bytes[first] == 0) ++first;
        const size_t width = 32 - first;
        code_.push_back(static_cast<uint8_t>(0x60 + width - 1));
        code_.insert(code_.end(), bytes.begin() + first, bytes.end());
        return *this;
    }

    Asm& push(uint64_t v) { return push(evmtaint::Word(v)); }

    /// PUSH4 regardless of magnitude (dispatcher comparisons).
    Asm& push_selector(uint32_t sel) {
        code_.push_back(0x63);
        code_.push_back(static_cast<uint8_t>(sel >> 24));
        code_.push_back(static_cast<uint8_t>(sel >> 16));
        code_.push_back(static_cast<uint8_t>(sel >> 8));
        code_.push_back(static_cast<uint8_t>(sel));
        return *this;
    }

    /// PUSH2 <label>, patched at assembly time.
    Asm& push_label(const std::string& name) {
        code_.push_back(0x61);
        fixups_.emplace_back(code_.size(), name);
        code_.push_back(0);
        code_.push_back(0);
        return *this;
    }

    /// Defines `name` here and emits the JUMPDEST it points at.
    Asm& label(const std::string& name) {
        if (!labels_.emplace(name, code_.size()).second)
            throw evmtaint::Error("assembler: duplicate label " + name);
        return op(evmtaint::Opcode::JUMPDEST);
    }

    Asm& jump(const std::string& name) {
        return push_label(name).op(evmtaint::Opcode::JUMP);
    }

    Asm& jumpi(const std::string& name) {
        return push_label(name).op(evmtaint::Opcode::JUMPI);
    }

    /// Standard selector dispatcher: CALLDATALOAD, SHR 224, then a
    /// DUP1/PUSH4/EQ/JUMPI chain, falling through to REVERT.
    Asm& dispatcher(std::initializer_list<std::pair<uint32_t, const char*>> cases) {
        push(uint64_t{0}).op(evmtaint::Opcode::CALLDATALOAD);
        push(uint64_t{224}).op(evmtaint::Opcode::SHR);
        for (const auto& [sel, target] : cases) {
            op(evmtaint::Opcode::DUP1);
            push_selector(sel);
            op(evmtaint::Opcode::EQ);
            jumpi(target);
        }
        push(uint64_t{0}).push(uint64_t{0}).op(evmtaint::Opcode::REVERT);
        return *this;
    }

    size_t offset() const { return code_.size(); }

    std::vector<uint8_t> assemble() const {
        std::vector<uint8_t> out = code_;
        for (const auto& [pos, name] : fixups_) {
            const auto it = labels_.find(name);
            if (it == labels_.end())
                throw evmtaint::Error("assembler: undefined label " + name);
            if (it->second > 0xffff)
                throw evmtaint::Error("assembler: label out of PUSH2 range " + name);
            out[pos] = static_cast<uint8_t>(it->second >> 8);
            out[pos + 1] = static_cast<uint8_t>(it->second);
        }
        return out;
    }

    std::string assemble_hex() const { return evmtaint::hex_encode(assemble()); }

  private:
    std::vector<uint8_t> code_;
    std::map<std::string, size_t> labels_;
    std::vector<std::pair<size_t, std::string>> fixups_;
};

}  // namespace fixture
