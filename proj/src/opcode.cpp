// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/opcode.hpp"

#include <array>

namespace evmtaint {

namespace {

constexpr const char* kPushNames[] = {
    "PUSH0",  "PUSH1",  "PUSH2",  "PUSH3",  "PUSH4",  "PUSH5",  "PUSH6",
    "PUSH7",  "PUSH8",  "PUSH9",  "PUSH10", "PUSH11", "PUSH12", "PUSH13",
    "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19", "PUSH20",
    "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27",
    "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32"};
constexpr const char* kDupNames[] = {
    "DUP1", "DUP2",  "DUP3",  "DUP4",  "DUP5",  "DUP6",  "DUP7",  "DUP8",
    "DUP9", "DUP10", "DUP11", "DUP12", "DUP13", "DUP14", "DUP15", "DUP16"};
constexpr const char* kSwapNames[] = {
    "SWAP1", "SWAP2",  "SWAP3",  "SWAP4",  "SWAP5",  "SWAP6",  "SWAP7",  "SWAP8",
    "SWAP9", "SWAP10", "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16"};
constexpr const char* kLogNames[] = {"LOG0", "LOG1", "LOG2", "LOG3", "LOG4"};

struct Table {
    std::array<OpcodeInfo, 256> info{};

    constexpr void set(Opcode op, const char* name, uint8_t pops, uint8_t pushes,
                       bool terminator = false) {
        info[static_cast<uint8_t>(op)] = {name, pops, pushes, 0, true, terminator};
    }

    constexpr Table() {
        for (auto& e : info) e = OpcodeInfo{};  // unknown bytes keep defaults

        set(Opcode::STOP, "STOP", 0, 0, true);
        set(Opcode::ADD, "ADD", 2, 1);
        set(Opcode::MUL, "MUL", 2, 1);
        set(Opcode::SUB, "SUB", 2, 1);
        set(Opcode::DIV, "DIV", 2, 1);
        set(Opcode::SDIV, "SDIV", 2, 1);
        set(Opcode::MOD, "MOD", 2, 1);
        set(Opcode::SMOD, "SMOD", 2, 1);
        set(Opcode::ADDMOD, "ADDMOD", 3, 1);
        set(Opcode::MULMOD, "MULMOD", 3, 1);
        set(Opcode::EXP, "EXP", 2, 1);
        set(Opcode::SIGNEXTEND, "SIGNEXTEND", 2, 1);
        set(Opcode::LT, "LT", 2, 1);
        set(Opcode::GT, "GT", 2, 1);
        set(Opcode::SLT, "SLT", 2, 1);
        set(Opcode::SGT, "SGT", 2, 1);
        set(Opcode::EQ, "EQ", 2, 1);
        set(Opcode::ISZERO, "ISZERO", 1, 1);
        set(Opcode::AND, "AND", 2, 1);
        set(Opcode::OR, "OR", 2, 1);
        set(Opcode::XOR, "XOR", 2, 1);
        set(Opcode::NOT, "NOT", 1, 1);
        set(Opcode::BYTE, "BYTE", 2, 1);
        set(Opcode::SHL, "SHL", 2, 1);
        set(Opcode::SHR, "SHR", 2, 1);
        set(Opcode::SAR, "SAR", 2, 1);
        set(Opcode::KECCAK256, "KECCAK256", 2, 1);
        set(Opcode::ADDRESS, "ADDRESS", 0, 1);
        set(Opcode::BALANCE, "BALANCE", 1, 1);
        set(Opcode::ORIGIN, "ORIGIN", 0, 1);
        set(Opcode::CALLER, "CALLER", 0, 1);
        set(Opcode::CALLVALUE, "CALLVALUE", 0, 1);
        set(Opcode::CALLDATALOAD, "CALLDATALOAD", 1, 1);
        set(Opcode::CALLDATASIZE, "CALLDATASIZE", 0, 1);
        set(Opcode::CALLDATACOPY, "CALLDATACOPY", 3, 0);
        set(Opcode::CODESIZE, "CODESIZE", 0, 1);
        set(Opcode::CODECOPY, "CODECOPY", 3, 0);
        set(Opcode::GASPRICE, "GASPRICE", 0, 1);
        set(Opcode::EXTCODESIZE, "EXTCODESIZE", 1, 1);
        set(Opcode::EXTCODECOPY, "EXTCODECOPY", 4, 0);
        set(Opcode::RETURNDATASIZE, "RETURNDATASIZE", 0, 1);
        set(Opcode::RETURNDATACOPY, "RETURNDATACOPY", 3, 0);
        set(Opcode::EXTCODEHASH, "EXTCODEHASH", 1, 1);
        set(Opcode::BLOCKHASH, "BLOCKHASH", 1, 1);
        set(Opcode::COINBASE, "COINBASE", 0, 1);
        set(Opcode::TIMESTAMP, "TIMESTAMP", 0, 1);
        set(Opcode::NUMBER, "NUMBER", 0, 1);
        set(Opcode::PREVRANDAO, "PREVRANDAO", 0, 1);
        set(Opcode::GASLIMIT, "GASLIMIT", 0, 1);
        set(Opcode::CHAINID, "CHAINID", 0, 1);
        set(Opcode::SELFBALANCE, "SELFBALANCE", 0, 1);
        set(Opcode::BASEFEE, "BASEFEE", 0, 1);
        set(Opcode::BLOBHASH, "BLOBHASH", 1, 1);
        set(Opcode::BLOBBASEFEE, "BLOBBASEFEE", 0, 1);
        set(Opcode::POP, "POP", 1, 0);
        set(Opcode::MLOAD, "MLOAD", 1, 1);
        set(Opcode::MSTORE, "MSTORE", 2, 0);
        set(Opcode::MSTORE8, "MSTORE8", 2, 0);
        set(Opcode::SLOAD, "SLOAD", 1, 1);
        set(Opcode::SSTORE, "SSTORE", 2, 0);
        set(Opcode::JUMP, "JUMP", 1, 0, true);
        set(Opcode::JUMPI, "JUMPI", 2, 0);  // conditional: block ends, but falls through
        set(Opcode::PC, "PC", 0, 1);
        set(Opcode::MSIZE, "MSIZE", 0, 1);
        set(Opcode::GAS, "GAS", 0, 1);
        set(Opcode::JUMPDEST, "JUMPDEST", 0, 0);
        set(Opcode::TLOAD, "TLOAD", 1, 1);
        set(Opcode::TSTORE, "TSTORE", 2, 0);
        set(Opcode::MCOPY, "MCOPY", 3, 0);
        set(Opcode::CREATE, "CREATE", 3, 1);
        set(Opcode::CALL, "CALL", 7, 1);
        set(Opcode::CALLCODE, "CALLCODE", 7, 1);
        set(Opcode::RETURN, "RETURN", 2, 0, true);
        set(Opcode::DELEGATECALL, "DELEGATECALL", 6, 1);
        set(Opcode::CREATE2, "CREATE2", 4, 1);
        set(Opcode::STATICCALL, "STATICCALL", 6, 1);
        set(Opcode::REVERT, "REVERT", 2, 0, true);
        set(Opcode::INVALID, "INVALID", 0, 0, true);
        set(Opcode::SELFDESTRUCT, "SELFDESTRUCT", 1, 0, true);

        for (unsigned n = 0; n <= 32; ++n) {
            auto& e = info[0x5f + n];
            e = {kPushNames[n], 0, 1, static_cast<uint8_t>(n), true, false};
        }
        for (unsigned n = 1; n <= 16; ++n) {
            info[0x80 + n - 1] = {kDupNames[n - 1], static_cast<uint8_t>(n),
                                  static_cast<uint8_t>(n + 1), 0, true, false};
            info[0x90 + n - 1] = {kSwapNames[n - 1], static_cast<uint8_t>(n + 1),
                                  static_cast<uint8_t>(n + 1), 0, true, false};
        }
        for (unsigned n = 0; n <= 4; ++n)
            info[0xa0 + n] = {kLogNames[n], static_cast<uint8_t>(n + 2), 0, 0, true, false};
    }
};

constexpr Table kTable{};

}  // namespace

const OpcodeInfo& opcode_info(uint8_t byte) noexcept {
    return kTable.info[byte];
}

std::string_view opcode_name(Opcode op) noexcept {
    return opcode_info(op).name;
}

}  // namespace evmtaint
