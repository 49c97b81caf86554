// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/ir.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "evmtaint/fold.hpp"

namespace evmtaint::ir {

const char* call_kind_name(CallKind k) noexcept {
    switch (k) {
        case CallKind::Call: return "call";
        case CallKind::Staticcall: return "staticcall";
        case CallKind::Delegatecall: return "delegatecall";
        case CallKind::Callcode: return "callcode";
    }
    return "?";
}

const char* resolution_name(Resolution r) noexcept {
    switch (r) {
        case Resolution::ConstPush: return "const_push";
        case Resolution::StorageSlot: return "storage_slot";
        case Resolution::Parameter: return "parameter";
        case Resolution::Unresolved: return "unresolved";
    }
    return "?";
}

namespace {

constexpr size_t kStackCap = 1024;

bool is_dup(uint8_t raw) { return raw >= 0x80 && raw <= 0x8f; }
bool is_swap(uint8_t raw) { return raw >= 0x90 && raw <= 0x9f; }

// Environment opcodes that push one context-dependent word and pop nothing.
bool is_env_push(Opcode op) {
    switch (op) {
        case Opcode::ADDRESS:
        case Opcode::ORIGIN:
        case Opcode::CALLER:
        case Opcode::CALLVALUE:
        case Opcode::CALLDATASIZE:
        case Opcode::CODESIZE:
        case Opcode::GASPRICE:
        case Opcode::RETURNDATASIZE:
        case Opcode::COINBASE:
        case Opcode::TIMESTAMP:
        case Opcode::NUMBER:
        case Opcode::PREVRANDAO:
        case Opcode::GASLIMIT:
        case Opcode::CHAINID:
        case Opcode::SELFBALANCE:
        case Opcode::BASEFEE:
        case Opcode::BLOBBASEFEE:
        case Opcode::MSIZE:
        case Opcode::GAS: return true;
        default: return false;
    }
}

struct Lifter {
    const Cfg& cfg;
    const PublicFunction& func;
    LiftedFunction out;

    std::set<uint32_t> region;
    std::vector<uint32_t> rpo;
    std::map<uint32_t, size_t> rpo_index;
    std::map<uint32_t, std::vector<uint32_t>> preds;  // in-region predecessors
    std::map<uint32_t, int> entry_depth;
    std::map<uint32_t, std::vector<ValueId>> entry_tokens;  // [0] = bottom
    std::map<uint32_t, std::vector<ValueId>> exit_stacks;

    std::map<Word, ValueId> const_ids;
    std::map<uint8_t, ValueId> env_ids;
    std::map<Word, ValueId> calldata_ids;
    std::map<ValueId, Word> sload_slots;     // sload result -> constant slot
    std::map<ValueId, uint32_t> def_stmt;    // result -> defining statement id
    std::map<ValueId, std::set<ValueId>> phi_inputs;
    std::set<ValueId> complete_tokens;       // merge tokens with all inputs known

    // Most recent external call, for RETURNDATACOPY attribution.
    ValueId last_ret_data = kNoValue;

    explicit Lifter(const PublicFunction& f, const Cfg& c) : cfg(c), func(f) {}

    ValueId new_value(ValueInfo info) {
        out.values.push_back(std::move(info));
        return static_cast<ValueId>(out.values.size() - 1);
    }
    ValueId const_val(const Word& w) {
        auto it = const_ids.find(w);
        if (it != const_ids.end()) return it->second;
        ValueId id = new_value({Origin::Const, w, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
        const_ids.emplace(w, id);
        return id;
    }
    ValueId env_val(Opcode op) {
        auto it = env_ids.find(static_cast<uint8_t>(op));
        if (it != env_ids.end()) return it->second;
        ValueId id = new_value({Origin::Env, std::nullopt, std::nullopt, op, UINT32_MAX, std::nullopt});
        env_ids.emplace(static_cast<uint8_t>(op), id);
        return id;
    }
    ValueId merge_val() { return new_value({Origin::Merge, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt}); }

    const std::optional<Word>& const_of(ValueId v) const { return out.values[v].const_value; }

    std::vector<uint32_t> region_succs(uint32_t b) const {
        std::vector<uint32_t> r;
        for (uint32_t s : cfg.successors(b))
            if (region.count(s)) r.push_back(s);
        return r;
    }

    void compute_order() {
        for (uint32_t b : func.reachable_blocks) region.insert(b);
        // Iterative post-order DFS from the function entry.
        std::vector<uint32_t> post;
        std::set<uint32_t> seen{func.entry_block};
        std::vector<std::pair<uint32_t, size_t>> stack{{func.entry_block, 0}};
        while (!stack.empty()) {
            auto& [b, next] = stack.back();
            const auto succs = region_succs(b);
            if (next < succs.size()) {
                uint32_t s = succs[next++];
                if (seen.insert(s).second) stack.push_back({s, 0});
            } else {
                post.push_back(b);
                stack.pop_back();
            }
        }
        rpo.assign(post.rbegin(), post.rend());
        for (size_t i = 0; i < rpo.size(); ++i) rpo_index[rpo[i]] = i;
        for (uint32_t b : rpo)
            for (uint32_t s : region_succs(b))
                if (rpo_index.count(s)) preds[s].push_back(b);
    }

    // --- block execution ------------------------------------------------
    //
    // One routine serves two phases: a shape pass (materialize == false)
    // that only tracks stack depth, and the lifting pass proper. Stack
    // effects are identical in both so the depth fixpoint stays consistent
    // with the statements that are eventually emitted.

    struct ExecState {
        std::vector<ValueId> stack;  // back() is the top
        bool underflow = false;
        uint32_t deficit = 0;
    };

    ValueId below_entry_slot(ExecState& st, bool materialize) {
        st.underflow = true;
        ++st.deficit;
        return materialize ? merge_val() : kNoValue;
    }

    ValueId pop(ExecState& st, bool materialize) {
        if (st.stack.empty()) return below_entry_slot(st, materialize);
        ValueId v = st.stack.back();
        st.stack.pop_back();
        return v;
    }
    void push(ExecState& st, ValueId v) {
        st.stack.push_back(v);
        if (st.stack.size() > kStackCap) st.stack.erase(st.stack.begin());
    }
    void pad_to(ExecState& st, size_t depth, bool materialize) {
        while (st.stack.size() < depth)
            st.stack.insert(st.stack.begin(), below_entry_slot(st, materialize));
    }

    Statement& emit(StatementKind kind) {
        Statement s;
        s.id = static_cast<uint32_t>(out.statements.size());
        s.kind = kind;
        out.statements.push_back(std::move(s));
        return out.statements.back();
    }

    // Block-local constant-offset memory environment: offset -> word value.
    using MemEnv = std::map<uint64_t, ValueId>;

    static std::optional<uint64_t> small_const(const std::optional<Word>& w) {
        if (w && w->fits_u64()) return w->low_u64();
        return std::nullopt;
    }

    void clobber(MemEnv& env, uint64_t off, uint64_t len) {
        if (len == 0) return;
        for (auto it = env.begin(); it != env.end();) {
            if (it->first < off + len && off < it->first + 32) it = env.erase(it);
            else ++it;
        }
    }

    // Follows single-input merge tokens (only those whose inputs are fully
    // known) and constant AND masks, so call-target provenance survives
    // block boundaries and address truncation.
    ValueId look_through(ValueId v) const {
        for (int i = 0; i < 16; ++i) {
            const ValueInfo& info = out.values[v];
            if (info.origin == Origin::Merge && complete_tokens.count(v)) {
                auto it = phi_inputs.find(v);
                if (it != phi_inputs.end() && it->second.size() == 1) {
                    v = *it->second.begin();
                    continue;
                }
            }
            if (info.origin == Origin::Op) {
                auto it = def_stmt.find(v);
                if (it != def_stmt.end() && it->second < out.statements.size()) {
                    const Statement& s = out.statements[it->second];
                    if (s.result == v && s.kind == StatementKind::AssignOp && s.op == Opcode::AND &&
                        s.operands.size() == 2) {
                        if (const_of(s.operands[0])) { v = s.operands[1]; continue; }
                        if (const_of(s.operands[1])) { v = s.operands[0]; continue; }
                    }
                }
            }
            break;
        }
        return v;
    }

    void resolve_call_site(CallSite& site, ValueId target) {
        ValueId t = look_through(target);
        if (const auto& cv = const_of(t)) {
            site.resolution = Resolution::ConstPush;
            site.resolved_target = Address::from_word(*cv);
            return;
        }
        if (auto it = sload_slots.find(t); it != sload_slots.end()) {
            site.resolution = Resolution::StorageSlot;
            site.storage_slot = it->second;
            return;
        }
        const ValueInfo& info = out.values[t];
        if (info.origin == Origin::Calldata && info.calldata_offset) {
            const auto off = small_const(info.calldata_offset);
            if (off && *off >= 4 && (*off - 4) % 32 == 0) {
                site.resolution = Resolution::Parameter;
                site.arg_index = static_cast<uint32_t>((*off - 4) / 32);
                return;
            }
        }
        site.resolution = Resolution::Unresolved;
    }

    // Selector bytes staged at an exact offset survive later word stores that
    // only clobber bytes past the 4-byte prefix (the usual ABI layout writes
    // the selector at the args base, then arguments at base + 4).
    using SelEnv = std::map<uint64_t, Selector>;

    static void clobber_selectors(SelEnv& env, uint64_t off, uint64_t len) {
        if (len == 0) return;
        for (auto it = env.begin(); it != env.end();) {
            if (it->first < off + len && off < it->first + 4) it = env.erase(it);
            else ++it;
        }
    }

    void exec_block(uint32_t block_id, std::vector<ValueId> stack, bool materialize) {
        ExecState st;
        st.stack = std::move(stack);
        MemEnv env;
        SelEnv sel_env;
        // Constant destinations of verbatim calldata copies seen in this block.
        std::set<uint64_t> calldata_copy_dests;

        const size_t stmts_mark = out.statements.size();
        const size_t sites_mark = out.call_sites.size();
        const size_t flows_mark = out.extra_flows.size();

        auto fresh_op = [&](Opcode op, std::vector<ValueId> operands) -> ValueId {
            if (!materialize) return kNoValue;
            std::vector<Word> consts;
            bool all_const = true;
            for (ValueId o : operands) {
                if (const auto& c = const_of(o)) consts.push_back(*c);
                else { all_const = false; break; }
            }
            std::optional<Word> folded;
            if (all_const) folded = fold_constant(op, consts);
            ValueId r = new_value({Origin::Op, folded, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
            Statement& s = emit(StatementKind::AssignOp);
            s.op = op;
            s.operands = std::move(operands);
            s.result = r;
            def_stmt[r] = s.id;
            return r;
        };

        for (const auto& ins : cfg.block_instructions(cfg.blocks[block_id])) {
            const uint8_t raw = ins.raw;
            if (ins.is_push()) {
                push(st, materialize ? const_val(ins.push_value()) : kNoValue);
                continue;
            }
            if (is_dup(raw)) {
                const size_t n = raw - 0x80 + 1;
                pad_to(st, n, materialize);
                push(st, st.stack[st.stack.size() - n]);
                continue;
            }
            if (is_swap(raw)) {
                const size_t n = raw - 0x90 + 1;
                pad_to(st, n + 1, materialize);
                std::swap(st.stack.back(), st.stack[st.stack.size() - 1 - n]);
                continue;
            }
            switch (ins.op) {
                case Opcode::POP: pop(st, materialize); break;
                case Opcode::JUMPDEST: break;
                case Opcode::JUMP:
                case Opcode::JUMPI: {
                    pop(st, materialize);                               // target
                    if (ins.op == Opcode::JUMPI) pop(st, materialize);  // condition
                    break;
                }
                case Opcode::PC: push(st, materialize ? const_val(Word(ins.offset)) : kNoValue); break;
                case Opcode::CALLDATALOAD: {
                    ValueId off = pop(st, materialize);
                    if (!materialize) { push(st, kNoValue); break; }
                    const auto& c = const_of(off);
                    ValueId v;
                    if (c && calldata_ids.count(*c)) {
                        v = calldata_ids[*c];
                    } else {
                        v = new_value({Origin::Calldata, std::nullopt, c, Opcode::STOP, UINT32_MAX, std::nullopt});
                        if (c) calldata_ids.emplace(*c, v);
                        Statement& s = emit(StatementKind::AssignOp);
                        s.op = Opcode::CALLDATALOAD;
                        s.operands = {off};
                        s.result = v;
                        def_stmt[v] = s.id;
                    }
                    push(st, v);
                    break;
                }
                case Opcode::SLOAD:
                case Opcode::TLOAD: {
                    ValueId slot = pop(st, materialize);
                    if (!materialize) { push(st, kNoValue); break; }
                    ValueId v = new_value({Origin::Sload, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    Statement& s = emit(StatementKind::Sload);
                    s.op = ins.op;
                    s.addr = slot;
                    s.result = v;
                    def_stmt[v] = s.id;
                    if (ins.op == Opcode::SLOAD) {
                        if (const auto& c = const_of(look_through(slot))) {
                            sload_slots.emplace(v, *c);
                            out.values[v].sload_slot = *c;
                        }
                    }
                    push(st, v);
                    break;
                }
                case Opcode::SSTORE:
                case Opcode::TSTORE: {
                    ValueId slot = pop(st, materialize);
                    ValueId val = pop(st, materialize);
                    if (!materialize) break;
                    Statement& s = emit(StatementKind::Sstore);
                    s.op = ins.op;
                    s.addr = slot;
                    s.value = val;
                    break;
                }
                case Opcode::MLOAD: {
                    ValueId off = pop(st, materialize);
                    if (!materialize) { push(st, kNoValue); break; }
                    ValueId v = new_value({Origin::Op, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    Statement& s = emit(StatementKind::Mload);
                    s.addr = off;
                    s.result = v;
                    def_stmt[v] = s.id;
                    if (const auto o = small_const(const_of(off))) {
                        if (auto it = env.find(*o); it != env.end()) {
                            out.extra_flows.emplace_back(it->second, v);
                            out.values[v].const_value = const_of(it->second);
                        }
                    }
                    push(st, v);
                    break;
                }
                case Opcode::MSTORE:
                case Opcode::MSTORE8: {
                    ValueId off = pop(st, materialize);
                    ValueId val = pop(st, materialize);
                    if (!materialize) break;
                    Statement& s = emit(StatementKind::Mstore);
                    s.op = ins.op;
                    s.addr = off;
                    s.value = val;
                    if (ins.op == Opcode::MSTORE8) s.length = const_val(Word(1));
                    const auto o = small_const(const_of(off));
                    if (!o) {
                        env.clear();
                        sel_env.clear();
                    } else if (ins.op == Opcode::MSTORE) {
                        clobber(env, *o, 32);
                        clobber_selectors(sel_env, *o, 32);
                        env[*o] = val;
                        if (const auto& c = const_of(val)) {
                            const auto b = c->bytes();
                            Selector sel{};
                            std::copy(b.begin(), b.begin() + 4, sel.value.begin());
                            sel_env[*o] = sel;
                        }
                    } else {
                        clobber(env, *o, 1);
                        clobber_selectors(sel_env, *o, 1);
                    }
                    break;
                }
                case Opcode::KECCAK256: {
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    if (!materialize) { push(st, kNoValue); break; }
                    ValueId mem = new_value({Origin::Op, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    Statement& ld = emit(StatementKind::Mload);
                    ld.addr = off;
                    ld.length = len;
                    ld.result = mem;
                    def_stmt[mem] = ld.id;
                    push(st, fresh_op(Opcode::KECCAK256, {mem}));
                    break;
                }
                case Opcode::CALLDATACOPY:
                case Opcode::CODECOPY:
                case Opcode::RETURNDATACOPY: {
                    ValueId dest = pop(st, materialize);
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    if (!materialize) break;
                    ValueId v;
                    if (ins.op == Opcode::CALLDATACOPY) {
                        v = new_value({Origin::Calldata, std::nullopt, const_of(off), Opcode::STOP, UINT32_MAX, std::nullopt});
                        const auto d = small_const(const_of(dest));
                        const auto o = small_const(const_of(off));
                        if (d && o && *o == 0 && out.values[len].origin == Origin::Env &&
                            out.values[len].env_op == Opcode::CALLDATASIZE)
                            calldata_copy_dests.insert(*d);
                    } else if (ins.op == Opcode::RETURNDATACOPY) {
                        v = last_ret_data != kNoValue
                                ? last_ret_data
                                : new_value({Origin::Returndata, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    } else {
                        v = new_value({Origin::Env, std::nullopt, std::nullopt, ins.op, UINT32_MAX, std::nullopt});
                    }
                    Statement& s = emit(StatementKind::Mstore);
                    s.op = ins.op;
                    s.addr = dest;
                    s.length = len;
                    s.value = v;
                    const auto d = small_const(const_of(dest));
                    const auto l = small_const(const_of(len));
                    if (d && l) {
                        clobber(env, *d, *l);
                        clobber_selectors(sel_env, *d, *l);
                    } else {
                        env.clear();
                        sel_env.clear();
                    }
                    break;
                }
                case Opcode::EXTCODECOPY: {
                    ValueId addr = pop(st, materialize);
                    ValueId dest = pop(st, materialize);
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    (void)addr;
                    (void)off;
                    if (!materialize) break;
                    Statement& s = emit(StatementKind::Mstore);
                    s.op = ins.op;
                    s.addr = dest;
                    s.length = len;
                    s.value = new_value({Origin::Env, std::nullopt, std::nullopt, ins.op, UINT32_MAX, std::nullopt});
                    const auto d = small_const(const_of(dest));
                    const auto l = small_const(const_of(len));
                    if (d && l) {
                        clobber(env, *d, *l);
                        clobber_selectors(sel_env, *d, *l);
                    } else {
                        env.clear();
                        sel_env.clear();
                    }
                    break;
                }
                case Opcode::MCOPY: {
                    ValueId dest = pop(st, materialize);
                    ValueId src = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    if (!materialize) break;
                    ValueId v = new_value({Origin::Op, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    Statement& ld = emit(StatementKind::Mload);
                    ld.addr = src;
                    ld.length = len;
                    ld.result = v;
                    def_stmt[v] = ld.id;
                    Statement& s = emit(StatementKind::Mstore);
                    s.addr = dest;
                    s.length = len;
                    s.value = v;
                    const auto d = small_const(const_of(dest));
                    const auto l = small_const(const_of(len));
                    if (d && l) {
                        clobber(env, *d, *l);
                        clobber_selectors(sel_env, *d, *l);
                    } else {
                        env.clear();
                        sel_env.clear();
                    }
                    break;
                }
                case Opcode::CREATE:
                case Opcode::CREATE2: {
                    ValueId value = pop(st, materialize);
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    ValueId salt = ins.op == Opcode::CREATE2 ? pop(st, materialize) : kNoValue;
                    if (!materialize) { push(st, kNoValue); break; }
                    ValueId mem = new_value({Origin::Op, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    Statement& ld = emit(StatementKind::Mload);
                    ld.addr = off;
                    ld.length = len;
                    ld.result = mem;
                    def_stmt[mem] = ld.id;
                    std::vector<ValueId> ops{value, mem};
                    if (salt != kNoValue) ops.push_back(salt);
                    push(st, fresh_op(ins.op, std::move(ops)));
                    break;
                }
                case Opcode::LOG0:
                case Opcode::LOG1:
                case Opcode::LOG2:
                case Opcode::LOG3:
                case Opcode::LOG4: {
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    const size_t topics = raw - 0xa0;
                    std::vector<ValueId> ts;
                    for (size_t i = 0; i < topics; ++i) ts.push_back(pop(st, materialize));
                    if (!materialize) break;
                    Statement& s = emit(StatementKind::Log);
                    s.op = ins.op;
                    s.addr = off;
                    s.length = len;
                    s.operands = std::move(ts);
                    break;
                }
                case Opcode::CALL:
                case Opcode::CALLCODE:
                case Opcode::DELEGATECALL:
                case Opcode::STATICCALL: {
                    const bool has_value = ins.op == Opcode::CALL || ins.op == Opcode::CALLCODE;
                    ValueId gas = pop(st, materialize);
                    ValueId target = pop(st, materialize);
                    ValueId value = has_value ? pop(st, materialize) : kNoValue;
                    ValueId args_off = pop(st, materialize);
                    ValueId args_len = pop(st, materialize);
                    ValueId ret_off = pop(st, materialize);
                    ValueId ret_len = pop(st, materialize);
                    (void)gas;
                    if (!materialize) { push(st, kNoValue); break; }

                    const CallKind kind = ins.op == Opcode::CALL           ? CallKind::Call
                                          : ins.op == Opcode::CALLCODE     ? CallKind::Callcode
                                          : ins.op == Opcode::DELEGATECALL ? CallKind::Delegatecall
                                                                           : CallKind::Staticcall;
                    ValueId flag = new_value({Origin::Op, std::nullopt, std::nullopt, Opcode::STOP, UINT32_MAX, std::nullopt});
                    ValueId ret_data =
                        new_value({Origin::Returndata, std::nullopt, std::nullopt, Opcode::STOP,
                                   static_cast<uint32_t>(out.statements.size()), std::nullopt});
                    Statement& s = emit(StatementKind::ExternalCall);
                    s.op = ins.op;
                    s.call_kind = kind;
                    s.target = target;
                    s.call_value = value;
                    s.args_offset = args_off;
                    s.args_length = args_len;
                    s.ret_offset = ret_off;
                    s.ret_length = ret_len;
                    s.result_flag = flag;
                    s.ret_data = ret_data;
                    def_stmt[flag] = s.id;
                    def_stmt[ret_data] = s.id;
                    last_ret_data = ret_data;

                    CallSite site;
                    site.statement = s.id;
                    site.kind = kind;
                    const auto ao = small_const(const_of(args_off));
                    const auto al = small_const(const_of(args_len));
                    if (ao) {
                        if (auto it = sel_env.find(*ao); it != sel_env.end())
                            site.resolved_selector = it->second;
                        for (const auto& [off2, vid] : env) {
                            if (off2 < *ao + 4 || (off2 - *ao - 4) % 32 != 0) continue;
                            if (al && off2 + 32 > *ao + *al) continue;
                            site.staged_args.emplace_back(static_cast<uint32_t>((off2 - *ao - 4) / 32), vid);
                        }
                        site.forwards_calldata = calldata_copy_dests.count(*ao) &&
                                                 out.values[args_len].origin == Origin::Env &&
                                                 out.values[args_len].env_op == Opcode::CALLDATASIZE;
                    } else {
                        site.args_opaque = true;
                    }
                    resolve_call_site(site, target);
                    out.call_sites.push_back(std::move(site));

                    const auto ro = small_const(const_of(ret_off));
                    const auto rl = small_const(const_of(ret_len));
                    if (ro && rl) {
                        clobber(env, *ro, *rl);
                        clobber_selectors(sel_env, *ro, *rl);
                    } else {
                        env.clear();
                        sel_env.clear();
                    }
                    push(st, flag);
                    break;
                }
                case Opcode::RETURN:
                case Opcode::REVERT: {
                    ValueId off = pop(st, materialize);
                    ValueId len = pop(st, materialize);
                    if (!materialize) break;
                    Statement& s = emit(ins.op == Opcode::RETURN ? StatementKind::Return
                                                                 : StatementKind::Revert);
                    s.addr = off;
                    s.length = len;
                    break;
                }
                case Opcode::SELFDESTRUCT: pop(st, materialize); break;
                case Opcode::STOP:
                case Opcode::INVALID: break;
                default: {
                    if (is_env_push(ins.op)) {
                        push(st, materialize ? env_val(ins.op) : kNoValue);
                        break;
                    }
                    const OpcodeInfo& info = opcode_info(ins.op);
                    std::vector<ValueId> in(info.pops);
                    for (auto& v : in) v = pop(st, materialize);
                    if (info.pushes == 1) push(st, fresh_op(ins.op, std::move(in)));
                    break;
                }
            }
            if (opcode_info(ins.op).terminator || ins.op == Opcode::JUMP || ins.op == Opcode::JUMPI) break;
        }

        if (materialize && st.underflow) {
            out.statements.resize(stmts_mark);
            out.call_sites.resize(sites_mark);
            out.extra_flows.resize(flows_mark);
            ++out.stack_underflow_blocks;
        }
        exit_stacks[block_id] = std::move(st.stack);
    }

    // Exit depth of `b` when entered with `d` slots; pure shape computation.
    size_t exit_depth(uint32_t b, int d) {
        exec_block(b, std::vector<ValueId>(static_cast<size_t>(d), kNoValue), false);
        size_t n = exit_stacks[b].size();
        exit_stacks.erase(b);
        return n;
    }

    void compute_depths() {
        const int seed = func.entry_block == cfg.entry ? 0 : 1;
        entry_depth[func.entry_block] = seed;
        bool changed = true;
        while (changed) {
            changed = false;
            for (uint32_t b : rpo) {
                auto it = entry_depth.find(b);
                if (it == entry_depth.end()) continue;
                const int ed = static_cast<int>(exit_depth(b, it->second));
                for (uint32_t s : region_succs(b)) {
                    auto is = entry_depth.find(s);
                    if (is == entry_depth.end()) {
                        entry_depth[s] = ed;
                        changed = true;
                    } else if (ed < is->second) {
                        is->second = ed;
                        changed = true;
                    }
                }
            }
        }
    }

    // Aligned slot of `pred`'s exit stack feeding slot `i` (from the bottom
    // of the successor's entry window).
    std::optional<ValueId> incoming(uint32_t pred, size_t depth, size_t i) const {
        auto it = exit_stacks.find(pred);
        if (it == exit_stacks.end() || it->second.size() < depth) return std::nullopt;
        return it->second[it->second.size() - depth + i];
    }

    void run() {
        if (cfg.blocks.empty() || func.entry_block >= cfg.blocks.size()) return;
        out.selector = func.selector;
        compute_order();
        compute_depths();

        for (uint32_t b : rpo) {
            const int d = entry_depth.count(b) ? entry_depth[b] : 0;
            auto& tokens = entry_tokens[b];
            for (int i = 0; i < d; ++i) tokens.push_back(merge_val());
        }

        for (uint32_t b : rpo) {
            const auto& tokens = entry_tokens[b];
            const auto& ps = preds.count(b) ? preds[b] : std::vector<uint32_t>{};
            const bool all_forward =
                std::all_of(ps.begin(), ps.end(), [&](uint32_t p) { return rpo_index.at(p) < rpo_index.at(b); });
            if (all_forward && !ps.empty()) {
                for (size_t i = 0; i < tokens.size(); ++i) {
                    std::optional<Word> agreed;
                    bool ok = true;
                    for (uint32_t p : ps) {
                        const auto in = incoming(p, tokens.size(), i);
                        std::optional<Word> c;
                        if (in) c = const_of(*in);
                        if (!c || (agreed && !(*agreed == *c))) { ok = false; break; }
                        agreed = c;
                    }
                    if (ok && agreed) out.values[tokens[i]].const_value = agreed;
                    for (uint32_t p : ps)
                        if (const auto in = incoming(p, tokens.size(), i)) phi_inputs[tokens[i]].insert(*in);
                }
                for (ValueId t : tokens) complete_tokens.insert(t);
            }
            exec_block(b, tokens, true);
        }

        // Merge-input flow edges for every in-region edge (back edges included).
        for (uint32_t b : rpo) {
            for (uint32_t s : region_succs(b)) {
                const auto& tokens = entry_tokens[s];
                for (size_t i = 0; i < tokens.size(); ++i) {
                    const auto in = incoming(b, tokens.size(), i);
                    if (in && *in != tokens[i]) out.extra_flows.emplace_back(*in, tokens[i]);
                }
            }
        }
        std::sort(out.extra_flows.begin(), out.extra_flows.end());
        out.extra_flows.erase(std::unique(out.extra_flows.begin(), out.extra_flows.end()),
                              out.extra_flows.end());
    }
};

}  // namespace

LiftedFunction lift_function(const PublicFunction& func, const Cfg& cfg) {
    Lifter lifter(func, cfg);
    lifter.run();
    return std::move(lifter.out);
}

// ---------------------------------------------------------------------------
// Relational encoding.

std::string value_sym(std::string_view tag, ValueId v) {
    return "v" + std::string(tag) + ":" + std::to_string(v);
}
std::string stmt_sym(std::string_view tag, uint32_t stmt) {
    return "s" + std::string(tag) + ":" + std::to_string(stmt);
}
std::string region_sym(std::string_view tag, uint32_t region) {
    return "r" + std::string(tag) + ":" + std::to_string(region);
}

namespace {

std::string word_hex(const Word& w) {
    if (w.fits_u64()) {
        char buf[20];
        std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(w.low_u64()));
        return buf;
    }
    return w.hex();
}

}  // namespace

std::string slot_sym(std::string_view storage_key, const std::optional<Word>& slot) {
    return "slot:" + std::string(storage_key) + ":" + (slot ? word_hex(*slot) : "any");
}

void declare_schema(datalog::FactBase& fb) {
    fb.declare("Def", 2);
    fb.declare("Use", 2);
    fb.declare("Flow", 2);
    fb.declare("StoreSlot", 2);
    fb.declare("LoadSlot", 2);
    fb.declare("MemWrite", 2);
    fb.declare("MemRead", 2);
    fb.declare("MayAlias", 2);
    fb.declare("ExtCall", 4);
    fb.declare("CallArgRegion", 2);
    fb.declare("CallRetValue", 2);
    fb.declare("CallArgWord", 3);
    fb.declare("CallArgUnknown", 1);
    fb.declare("CalldataArg", 2);
    fb.declare("CalldataAnyArg", 1);
    fb.declare("RetRegion", 2);
    fb.declare("RegionOpaque", 1);
    fb.declare("CallForwards", 1);
}

namespace {

// Region identity: (base value, length value). kNoValue length means one word.
struct RegionKey {
    ValueId base;
    ValueId length;
    friend auto operator<=>(const RegionKey&, const RegionKey&) = default;
};

struct RegionInterval {
    bool base_known = false;
    uint64_t base = 0;
    bool len_known = false;
    uint64_t len = 0;
};

bool may_alias(const RegionInterval& a, const RegionInterval& b) {
    if ((a.len_known && a.len == 0) || (b.len_known && b.len == 0)) return false;
    if (!a.base_known || !b.base_known) return true;
    const uint64_t end_a = a.len_known ? a.base + a.len : UINT64_MAX;
    const uint64_t end_b = b.len_known ? b.base + b.len : UINT64_MAX;
    return a.base < end_b && b.base < end_a;
}

}  // namespace

void emit_facts(const LiftedFunction& fn, datalog::FactBase& fb, std::string_view tag,
                std::string_view storage_key) {
    declare_schema(fb);

    const auto vs = [&](ValueId v) { return value_sym(tag, v); };
    const auto ss = [&](uint32_t s) { return stmt_sym(tag, s); };

    std::map<RegionKey, uint32_t> region_ids;
    std::vector<RegionInterval> intervals;
    const auto region_of = [&](ValueId base, ValueId length) -> uint32_t {
        const RegionKey key{base, length};
        if (auto it = region_ids.find(key); it != region_ids.end()) return it->second;
        const uint32_t id = static_cast<uint32_t>(intervals.size());
        region_ids.emplace(key, id);
        RegionInterval iv;
        if (const auto& c = fn.values[base].const_value; c && c->fits_u64()) {
            iv.base_known = true;
            iv.base = c->low_u64();
        }
        if (length == kNoValue) {
            iv.len_known = true;
            iv.len = 32;
        } else if (const auto& c = fn.values[length].const_value; c && c->fits_u64()) {
            iv.len_known = true;
            iv.len = c->low_u64();
        }
        intervals.push_back(iv);
        return id;
    };

    const auto use = [&](ValueId v, uint32_t s) {
        if (v != kNoValue) fb.insert_names("Use", {vs(v), ss(s)});
    };
    const auto def = [&](ValueId v, uint32_t s) {
        if (v != kNoValue) fb.insert_names("Def", {vs(v), ss(s)});
    };
    const auto slot_of = [&](const Statement& s) {
        const bool transient = s.op == Opcode::TLOAD || s.op == Opcode::TSTORE;
        const auto& c = fn.values[s.addr].const_value;
        std::string sym = slot_sym(storage_key, c);
        if (transient) sym = "t" + sym;
        return sym;
    };

    for (const Statement& s : fn.statements) {
        switch (s.kind) {
            case StatementKind::AssignOp: {
                def(s.result, s.id);
                for (ValueId o : s.operands) {
                    use(o, s.id);
                    fb.insert_names("Flow", {vs(o), vs(s.result)});
                }
                break;
            }
            case StatementKind::Mstore: {
                const uint32_t r = region_of(s.addr, s.length);
                fb.insert_names("MemWrite", {region_sym(tag, r), vs(s.value)});
                use(s.addr, s.id);
                use(s.value, s.id);
                use(s.length, s.id);
                break;
            }
            case StatementKind::Mload: {
                const uint32_t r = region_of(s.addr, s.length);
                fb.insert_names("MemRead", {region_sym(tag, r), vs(s.result)});
                def(s.result, s.id);
                use(s.addr, s.id);
                use(s.length, s.id);
                break;
            }
            case StatementKind::Sstore: {
                fb.insert_names("StoreSlot", {slot_of(s), vs(s.value)});
                use(s.addr, s.id);
                use(s.value, s.id);
                break;
            }
            case StatementKind::Sload: {
                fb.insert_names("LoadSlot", {slot_of(s), vs(s.result)});
                def(s.result, s.id);
                use(s.addr, s.id);
                break;
            }
            case StatementKind::ExternalCall: {
                break;  // handled with the call-site table below
            }
            case StatementKind::Return: {
                const uint32_t r = region_of(s.addr, s.length);
                fb.insert_names("RetRegion", {ss(s.id), region_sym(tag, r)});
                use(s.addr, s.id);
                use(s.length, s.id);
                break;
            }
            case StatementKind::Revert: {
                use(s.addr, s.id);
                use(s.length, s.id);
                break;
            }
            case StatementKind::Log: {
                use(s.addr, s.id);
                use(s.length, s.id);
                for (ValueId t : s.operands) use(t, s.id);
                break;
            }
        }
    }

    for (const CallSite& site : fn.call_sites) {
        const Statement& s = fn.statements[site.statement];
        const std::string sel = site.resolved_selector ? site.resolved_selector->hex() : "none";
        const std::string tgt = site.resolved_target ? site.resolved_target->hex() : "none";
        fb.insert_names("ExtCall", {ss(s.id), call_kind_name(site.kind), sel, tgt});
        const uint32_t args = region_of(s.args_offset, s.args_length);
        fb.insert_names("CallArgRegion", {ss(s.id), region_sym(tag, args)});
        const uint32_t ret = region_of(s.ret_offset, s.ret_length);
        fb.insert_names("MemWrite", {region_sym(tag, ret), vs(s.ret_data)});
        fb.insert_names("CallRetValue", {ss(s.id), vs(s.ret_data)});
        def(s.ret_data, s.id);
        def(s.result_flag, s.id);
        use(s.target, s.id);
        use(s.call_value, s.id);
        use(s.args_offset, s.id);
        use(s.args_length, s.id);
        use(s.ret_offset, s.id);
        use(s.ret_length, s.id);
        for (const auto& [pos, vid] : site.staged_args)
            fb.insert_names("CallArgWord", {ss(s.id), std::to_string(pos), vs(vid)});
        if (site.args_opaque) fb.insert_names("CallArgUnknown", {ss(s.id)});
        if (site.forwards_calldata) fb.insert_names("CallForwards", {ss(s.id)});
    }

    // Values produced by CALLDATACOPY span a byte range, not a single word,
    // so they never count as a positional argument.
    std::set<ValueId> spans;
    for (const Statement& s : fn.statements)
        if (s.kind == StatementKind::Mstore && s.op == Opcode::CALLDATACOPY &&
            s.value != kNoValue)
            spans.insert(s.value);

    for (ValueId v = 0; v < fn.values.size(); ++v) {
        const ValueInfo& info = fn.values[v];
        if (info.origin != Origin::Calldata) continue;
        if (!info.calldata_offset || spans.count(v)) {
            fb.insert_names("CalldataAnyArg", {vs(v)});
            continue;
        }
        if (!info.calldata_offset->fits_u64()) continue;
        const uint64_t off = info.calldata_offset->low_u64();
        if (off >= 4 && (off - 4) % 32 == 0)
            fb.insert_names("CalldataArg", {std::to_string((off - 4) / 32), vs(v)});
    }

    for (const auto& [from, to] : fn.extra_flows) fb.insert_names("Flow", {vs(from), vs(to)});

    for (uint32_t i = 0; i < intervals.size(); ++i) {
        if (!intervals[i].base_known || !intervals[i].len_known)
            fb.insert_names("RegionOpaque", {region_sym(tag, i)});
        for (uint32_t j = 0; j < intervals.size(); ++j)
            if (may_alias(intervals[i], intervals[j]))
                fb.insert_names("MayAlias", {region_sym(tag, i), region_sym(tag, j)});
    }
}

datalog::FactBase emit_facts(const LiftedFunction& fn) {
    datalog::FactBase fb;
    emit_facts(fn, fb, "", "0x0");
    return fb;
}

}  // namespace evmtaint::ir
