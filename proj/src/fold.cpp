// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/fold.hpp"

namespace evmtaint {

std::optional<Word> fold_constant(Opcode op, std::span<const Word> in) {
    const Word one(1);
    switch (op) {
        case Opcode::ADD: return add(in[0], in[1]);
        case Opcode::MUL: return mul(in[0], in[1]);
        case Opcode::SUB: return sub(in[0], in[1]);
        case Opcode::DIV: return udiv(in[0], in[1]);
        case Opcode::MOD: return umod(in[0], in[1]);
        case Opcode::EXP: return exp(in[0], in[1]);
        case Opcode::LT: return in[0] < in[1] ? one : Word{};
        case Opcode::GT: return in[1] < in[0] ? one : Word{};
        case Opcode::EQ: return in[0] == in[1] ? one : Word{};
        case Opcode::ISZERO: return in[0].is_zero() ? one : Word{};
        case Opcode::AND: return bit_and(in[0], in[1]);
        case Opcode::OR: return bit_or(in[0], in[1]);
        case Opcode::XOR: return bit_xor(in[0], in[1]);
        case Opcode::NOT: return bit_not(in[0]);
        case Opcode::SHL: return shl(in[0], in[1]);
        case Opcode::SHR: return shr(in[0], in[1]);
        case Opcode::BYTE: return byte_at(in[0], in[1]);
        default: return std::nullopt;
    }
}

}  // namespace evmtaint
