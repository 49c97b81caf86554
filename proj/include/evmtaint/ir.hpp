// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evmtaint/cfg.hpp"
#include "evmtaint/datalog.hpp"
#include "evmtaint/word.hpp"

namespace evmtaint::ir {

/// Dense per-function value index. Values are single-assignment: each id is
/// defined by exactly one statement, merge point, or external origin.
using ValueId = uint32_t;
inline constexpr ValueId kNoValue = UINT32_MAX;

enum class Origin : uint8_t {
    Const,       // PUSH immediate or folded constant
    Calldata,    // CALLDATALOAD result or CALLDATACOPY contents
    Env,         // environment opcode (CALLER, CALLVALUE, CALLDATASIZE, ...)
    Sload,       // storage read result
    Op,          // result of an assign_op statement
    Returndata,  // data returned by an external call
    Merge,       // join-point merge (phi-like) or unknown incoming stack slot
};

struct ValueInfo {
    Origin origin = Origin::Op;
    std::optional<Word> const_value;      // known compile-time constant
    std::optional<Word> calldata_offset;  // Origin::Calldata with constant offset
    Opcode env_op = Opcode::STOP;         // Origin::Env: which opcode produced it
    uint32_t def_call = UINT32_MAX;       // Origin::Returndata: call statement id
    std::optional<Word> sload_slot;       // Origin::Sload with constant slot
};

enum class StatementKind : uint8_t {
    AssignOp,      // result = op(operands)
    Mstore,        // memory[addr .. addr+length) = value   (length: 32 if kNoValue)
    Mload,         // result = memory[addr .. addr+length)
    Sstore,        // storage[addr] = value
    Sload,         // result = storage[addr]
    ExternalCall,  // CALL / STATICCALL / DELEGATECALL / CALLCODE
    Return,        // return memory region
    Revert,
    Log,
};

enum class CallKind : uint8_t { Call, Staticcall, Delegatecall, Callcode };

const char* call_kind_name(CallKind k) noexcept;

struct Statement {
    uint32_t id = 0;
    StatementKind kind = StatementKind::AssignOp;

    Opcode op = Opcode::STOP;        // AssignOp
    std::vector<ValueId> operands;   // AssignOp inputs; Log topics
    ValueId result = kNoValue;       // AssignOp / Mload / Sload result
    ValueId addr = kNoValue;         // memory offset or storage slot
    ValueId length = kNoValue;       // memory region length (kNoValue = one word)
    ValueId value = kNoValue;        // stored value

    // ExternalCall
    CallKind call_kind = CallKind::Call;
    ValueId target = kNoValue;
    ValueId call_value = kNoValue;   // ETH amount (CALL / CALLCODE only)
    ValueId args_offset = kNoValue, args_length = kNoValue;
    ValueId ret_offset = kNoValue, ret_length = kNoValue;
    ValueId result_flag = kNoValue;  // success bit pushed on the stack
    ValueId ret_data = kNoValue;     // returned bytes (written to the ret region)
};

enum class Resolution : uint8_t { ConstPush, StorageSlot, Parameter, Unresolved };

const char* resolution_name(Resolution r) noexcept;

struct CallSite {
    uint32_t statement = 0;
    CallKind kind = CallKind::Call;
    std::optional<Selector> resolved_selector;
    std::optional<Address> resolved_target;
    Resolution resolution = Resolution::Unresolved;
    std::optional<Word> storage_slot;  // Resolution::StorageSlot
    std::optional<uint32_t> arg_index; // Resolution::Parameter

    /// Values staged at decodable 32-byte argument positions of the args
    /// region, in (position, value id) form; used for positional matching.
    std::vector<std::pair<uint32_t, ValueId>> staged_args;
    /// True when the args region could not be decoded positionally.
    bool args_opaque = false;
    /// True when the args region is a verbatim copy of this function's own
    /// calldata (forwarding-proxy shape).
    bool forwards_calldata = false;
};

struct LiftedFunction {
    Selector selector;
    std::vector<ValueInfo> values;         // indexed by ValueId
    std::vector<Statement> statements;
    std::vector<CallSite> call_sites;      // one per ExternalCall statement
    /// Value flows that have no carrying statement: join-point merge inputs
    /// and block-local load forwarding.
    std::vector<std::pair<ValueId, ValueId>> extra_flows;
    uint32_t stack_underflow_blocks = 0;
};

/// Converts the function's blocks to three-address statements: symbolic
/// stacks with merge values at join points, a block-local constant memory
/// environment for call argument decoding, and conservative region handling
/// everywhere else. A block that pops past its incoming stack drops its
/// statements (counted in stack_underflow_blocks) but keeps its stack shape
/// so downstream blocks stay analyzable.
LiftedFunction lift_function(const PublicFunction& func, const Cfg& cfg);

/// Relational encoding of one lifted function:
///   Def(value, stmt)          Use(value, stmt)        Flow(from, to)
///   StoreSlot(slot, value)    LoadSlot(slot, value)
///   MemWrite(region, value)   MemRead(region, value)  MayAlias(r1, r2)
///   ExtCall(stmt, kind, selector|none, target|none)
///   CallArgRegion(stmt, region)  CallRetValue(stmt, value)
///   CallArgWord(stmt, pos, value)  CallArgUnknown(stmt)
///   CalldataArg(pos, value)   CalldataAnyArg(value)   RetRegion(stmt, region)
///   RegionOpaque(region)  -- base offset or byte length is not a known constant
///   CallForwards(stmt)    -- the call passes this function's calldata verbatim
/// Symbols are namespaced with `tag` so several functions can share a fact
/// base; storage slots are keyed by `storage_key` so contracts executing
/// against the same storage (delegatecall) share slot identities.
void emit_facts(const LiftedFunction& fn, datalog::FactBase& fb, std::string_view tag,
                std::string_view storage_key);

datalog::FactBase emit_facts(const LiftedFunction& fn);

/// Declares every relation emit_facts may populate (idempotent).
void declare_schema(datalog::FactBase& fb);

/// Symbol spellings used by emit_facts, shared with the taint layer.
std::string value_sym(std::string_view tag, ValueId v);
std::string stmt_sym(std::string_view tag, uint32_t stmt);
std::string region_sym(std::string_view tag, uint32_t region);
std::string slot_sym(std::string_view storage_key, const std::optional<Word>& slot);

}  // namespace evmtaint::ir
