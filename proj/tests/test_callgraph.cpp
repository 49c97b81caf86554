// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "evmtaint/callgraph.hpp"
#include "evmtaint/error.hpp"
#include "support/assembler.hpp"

using namespace evmtaint;
using evmtaint::ir::CallKind;
using evmtaint::ir::Resolution;

namespace {

Address addr_of(uint64_t tail) { return Address::from_word(Word(tail)); }

const Address kA = addr_of(0xaa);
const Address kB = addr_of(0xbb);
const Address kC = addr_of(0xcc);
const Address kRouter = addr_of(0xee);
const Address kProxy = addr_of(0x99);

constexpr uint32_t kSelA = 0x11111111;
constexpr uint32_t kSelB = 0x22222222;
constexpr uint32_t kSelC = 0x33333333;
constexpr uint32_t kSelRoute = 0x44444444;
constexpr uint32_t kBalanceOf = 0x70a08231;

Word selector_word(uint32_t sel) { return shl(Word(224), Word(sel)); }

/// Deterministic in-memory chain snapshot with per-address failure injection
/// and fetch counters.
class MemoryState final : public StateProvider {
public:
    void put_code(const Address& a, std::vector<uint8_t> bytes) {
        code_[a] = std::move(bytes);
    }
    void put_storage(const Address& a, const Word& slot, const Word& value) {
        storage_[{a, slot}] = value;
    }
    void fail_code_at(const Address& a) { code_failures_.insert(a); }
    void fail_storage_at(const Address& a) { storage_failures_.insert(a); }

    Bytecode get_code(const Address& address, uint64_t) override {
        ++code_reads[address];
        if (code_failures_.count(address)) throw Error("injected code fetch failure");
        Bytecode bc;
        if (auto it = code_.find(address); it != code_.end()) bc.bytes = it->second;
        return bc;
    }
    Word get_storage(const Address& address, const Word& slot, uint64_t) override {
        ++storage_reads;
        if (storage_failures_.count(address)) throw Error("injected storage fetch failure");
        auto it = storage_.find({address, slot});
        return it == storage_.end() ? Word{} : it->second;
    }

    std::map<Address, int> code_reads;
    int storage_reads = 0;

private:
    std::map<Address, std::vector<uint8_t>> code_;
    std::map<std::pair<Address, Word>, Word> storage_;
    std::set<Address> code_failures_;
    std::set<Address> storage_failures_;
};

/// Single-function contract: a dispatcher for `sel` and the given body.
std::vector<uint8_t> contract(uint32_t sel, const std::function<void(fixture::Asm&)>& body) {
    fixture::Asm a;
    a.dispatcher({{sel, "main"}});
    a.label("main");
    body(a);
    return a.assemble();
}

/// Emits one external call that stages `sel` as its argument selector. The
/// target is whatever `push_target` leaves on the stack.
void emit_call(fixture::Asm& a, uint32_t sel, Opcode kind,
               const std::function<void(fixture::Asm&)>& push_target, uint32_t args_len = 4) {
    a.push(selector_word(sel)).push(uint64_t{0}).op(Opcode::MSTORE);
    a.push(uint64_t{0}).push(uint64_t{0});              // ret region (len, off)
    a.push(uint64_t{args_len}).push(uint64_t{0});       // args region (len, off)
    if (kind == Opcode::CALL || kind == Opcode::CALLCODE) a.push(uint64_t{0});  // value
    push_target(a);
    a.op(Opcode::GAS).op(kind).op(Opcode::POP);
}

void push_const(fixture::Asm& a, const Address& target) { a.push(target.to_word()); }

ContractRef ref_of(const Address& a, uint64_t block = 100) { return {a, a, block}; }

const CgNode* find_node(const SubCallGraph& g, const Address& logic, uint32_t sel) {
    for (const auto& n : g.nodes) {
        if (n.contract.logic_address == logic && n.selector.as_u32() == sel) return &n;
    }
    return nullptr;
}

const CgEdge* find_edge(const SubCallGraph& g, const Address& caller_logic,
                        const Address& callee_logic) {
    for (const auto& e : g.edges) {
        if (!e.callee) continue;
        if (g.nodes[e.caller].contract.logic_address == caller_logic &&
            g.nodes[*e.callee].contract.logic_address == callee_logic)
            return &e;
    }
    return nullptr;
}

/// Structural invariants every built graph must satisfy: limits respected,
/// edge endpoints valid, no duplicate (caller, site, callee) edge, stubs
/// bare and ordinary nodes lifted.
void check_graph(const SubCallGraph& g, const ScgLimits& limits = {}) {
    REQUIRE(g.nodes.size() <= limits.max_nodes);
    REQUIRE(g.root < g.nodes.size());
    for (const auto& n : g.nodes) {
        CHECK(n.depth <= limits.max_depth);
        if (n.stub) {
            CHECK(n.fn.statements.empty());
            CHECK(n.facts.relation_names().empty());
        } else {
            CHECK(!n.facts.relation_names().empty());
        }
    }
    std::set<std::tuple<NodeId, uint32_t, uint64_t>> seen;
    for (const auto& e : g.edges) {
        REQUIRE(e.caller < g.nodes.size());
        REQUIRE(e.call_site < g.nodes[e.caller].fn.call_sites.size());
        if (e.callee) REQUIRE(*e.callee < g.nodes.size());
        const uint64_t callee_key = e.callee ? *e.callee : UINT64_MAX;
        CHECK(seen.emplace(e.caller, e.call_site, callee_key).second);
    }
}

}  // namespace

TEST_CASE("call kinds pick the storage context of the executing contract") {
    const ContractRef caller{kA, kB, 42};  // already inside a delegated context

    SUBCASE("plain and static calls run the callee against its own storage") {
        for (CallKind k : {CallKind::Call, CallKind::Staticcall}) {
            const ContractRef ctx = delegate_context(caller, kC, k);
            CHECK(ctx.logic_address == kC);
            CHECK(ctx.storage_address == kC);
            CHECK(ctx.block == 42);
        }
    }
    SUBCASE("delegatecall and callcode keep the caller's storage") {
        for (CallKind k : {CallKind::Delegatecall, CallKind::Callcode}) {
            const ContractRef ctx = delegate_context(caller, kC, k);
            CHECK(ctx.logic_address == kC);
            CHECK(ctx.storage_address == kB);  // inherited, not kA
            CHECK(ctx.block == 42);
        }
    }
}

TEST_CASE("target resolution follows constant, storage, parameter precedence") {
    MemoryState state;
    const ContractRef ctx = ref_of(kA);

    SUBCASE("constant targets need no state at all") {
        ir::CallSite site;
        site.resolution = Resolution::ConstPush;
        site.resolved_target = kB;
        const TargetResolution r = resolve_call_target(site, ctx, state);
        CHECK(r.kind == Resolution::ConstPush);
        CHECK(r.target == kB);
        CHECK(state.storage_reads == 0);
    }
    SUBCASE("storage targets read the slot in the site's storage context") {
        state.put_storage(kA, Word(0), kB.to_word());
        ir::CallSite site;
        site.resolution = Resolution::StorageSlot;
        site.storage_slot = Word(0);
        const TargetResolution r = resolve_call_target(site, ctx, state);
        CHECK(r.kind == Resolution::StorageSlot);
        CHECK(r.target == kB);  // low 20 bytes of the stored word
    }
    SUBCASE("a storage fetch failure degrades to unresolved with a note") {
        state.fail_storage_at(kA);
        ir::CallSite site;
        site.resolution = Resolution::StorageSlot;
        site.storage_slot = Word(0);
        const TargetResolution r = resolve_call_target(site, ctx, state);
        CHECK(r.kind == Resolution::Unresolved);
        CHECK(!r.target.has_value());
        CHECK(r.diagnostic.find("slot 0x0") != std::string::npos);
    }
    SUBCASE("parameter targets defer to the graph's dataflow pass") {
        ir::CallSite site;
        site.resolution = Resolution::Parameter;
        site.arg_index = 2;
        const TargetResolution r = resolve_call_target(site, ctx, state);
        CHECK(r.kind == Resolution::Parameter);
        CHECK(r.arg_index == 2u);
        CHECK(!r.target.has_value());
    }
    SUBCASE("environment-derived targets stay unresolved") {
        ir::CallSite site;  // as lifted from a CALLER target
        const TargetResolution r = resolve_call_target(site, ctx, state);
        CHECK(r.kind == Resolution::Unresolved);
        CHECK(r.diagnostic.empty());
    }
}

TEST_CASE("a contract with no external calls is a one-node graph") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        a.push(uint64_t{1}).push(uint64_t{0}).op(Opcode::SSTORE).op(Opcode::STOP);
    }));

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    REQUIRE(g.nodes.size() == 1);
    CHECK(g.edges.empty());
    CHECK(g.root == 0);
    CHECK(g.nodes[0].selector.as_u32() == kSelA);
    CHECK(g.nodes[0].depth == 0);
    CHECK(!g.truncation.depth_limited);
    CHECK(!g.truncation.node_limited);
    CHECK(g.truncation.cycles_cut == 0);
    CHECK(g.rounds == 1);
    CHECK(!g.nodes[0].facts.query("StoreSlot", {std::nullopt, std::nullopt}).empty());
}

TEST_CASE("a storage-held callee address resolves into a two-node graph") {
    // A's entry staticcalls balanceOf on the address in its slot 0; the test
    // placed B there, so manual resolution says the edge must land on B.
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kBalanceOf, Opcode::STATICCALL,
                  [](fixture::Asm& b) { b.push(uint64_t{0}).op(Opcode::SLOAD); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kBalanceOf, [](fixture::Asm& a) {
        a.push(uint64_t{2}).op(Opcode::SLOAD);
        a.push(uint64_t{0}).op(Opcode::MSTORE);
        a.push(uint64_t{32}).push(uint64_t{0}).op(Opcode::RETURN);
    }));
    state.put_storage(kA, Word(0), kB.to_word());

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);

    const CgEdge& e = g.edges[0];
    CHECK(e.caller == g.root);
    CHECK(e.kind == CallKind::Staticcall);
    CHECK(e.resolution == Resolution::StorageSlot);
    CHECK(e.target == kB);
    REQUIRE(e.callee.has_value());

    const CgNode& callee = g.nodes[*e.callee];
    CHECK(callee.contract.logic_address == kB);
    CHECK(callee.contract.storage_address == kB);  // staticcall: own storage
    CHECK(callee.selector.as_u32() == kBalanceOf);
    CHECK(callee.depth == 1);
    CHECK(!callee.stub);

    // The callee's storage read is keyed by B's own address.
    const auto loads = callee.facts.query("LoadSlot", {std::nullopt, std::nullopt});
    REQUIRE(loads.size() == 1);
    CHECK(callee.facts.names_of(loads[0])[0] == ir::slot_sym(kB.hex(), Word(2)));
}

TEST_CASE("the depth limit stops expansion and flags the graph") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) {
        emit_call(a, kSelC, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kC); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kC, contract(kSelC, [](fixture::Asm& a) {
        a.push(uint64_t{1}).push(uint64_t{9}).op(Opcode::SSTORE).op(Opcode::STOP);
    }));

    SUBCASE("an unconstrained build follows the whole chain") {
        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
        check_graph(g);
        CHECK(g.nodes.size() == 3);
        CHECK(g.edges.size() == 2);
        CHECK(!g.truncation.depth_limited);
        CHECK(find_node(g, kC, kSelC) != nullptr);
    }
    SUBCASE("depth one keeps the middle node but not its callee") {
        const ScgLimits limits{1, 64};
        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state, limits);
        check_graph(g, limits);
        CHECK(g.nodes.size() == 2);
        CHECK(g.truncation.depth_limited);
        CHECK(find_node(g, kC, kSelC) == nullptr);
        CHECK(state.code_reads.count(kC) == 0);  // never even fetched

        // B's call is recorded, but deliberately left unresolved.
        REQUIRE(g.edges.size() == 2);
        const CgNode* b = find_node(g, kB, kSelB);
        REQUIRE(b != nullptr);
        bool found_cut = false;
        for (const auto& e : g.edges) {
            if (&g.nodes[e.caller] != b) continue;
            CHECK(!e.callee.has_value());
            CHECK(e.resolution == Resolution::Unresolved);
            CHECK(e.selector->as_u32() == kSelC);  // selector matching survives
            found_cut = true;
        }
        CHECK(found_cut);
    }
}

TEST_CASE("the node budget cuts further callees but keeps their edges") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        emit_call(a, kSelC, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kC); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) { a.op(Opcode::STOP); }));
    state.put_code(kC, contract(kSelC, [](fixture::Asm& a) { a.op(Opcode::STOP); }));

    const ScgLimits limits{5, 2};
    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state, limits);
    check_graph(g, limits);
    CHECK(g.nodes.size() == 2);
    CHECK(g.truncation.node_limited);
    REQUIRE(g.edges.size() == 2);

    int linked = 0, cut = 0;
    for (const auto& e : g.edges) {
        if (e.callee) {
            ++linked;
        } else {
            ++cut;
            CHECK(e.target.has_value());    // address was recovered
            CHECK(e.selector.has_value());  // selector too: only the node is missing
        }
    }
    CHECK(linked == 1);
    CHECK(cut == 1);
}

TEST_CASE("mutually recursive contracts terminate with cycle edges") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) {
        emit_call(a, kSelA, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kA); });
        a.op(Opcode::STOP);
    }));

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 2);
    CHECK(g.truncation.cycles_cut == 1);  // B's edge back to the existing root
    CHECK(state.code_reads[kA] == 1);     // each node fetched and lifted once
    CHECK(state.code_reads[kB] == 1);

    const CgEdge* back = find_edge(g, kB, kA);
    REQUIRE(back != nullptr);
    CHECK(*back->callee == g.root);
}

TEST_CASE("repeated calls to one callee share a node but keep both edges") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) { a.op(Opcode::STOP); }));

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    CHECK(g.nodes.size() == 2);
    CHECK(g.edges.size() == 2);  // distinct call sites, same callee
    CHECK(g.truncation.cycles_cut == 1);
    CHECK(state.code_reads[kB] == 1);
    CHECK(g.edges[0].call_site != g.edges[1].call_site);
    CHECK(g.edges[0].callee == g.edges[1].callee);
}

TEST_CASE("delegatecall nodes run borrowed code in the caller's storage") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::DELEGATECALL, [](fixture::Asm& b) { push_const(b, kB); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) {
        a.push(uint64_t{1}).push(uint64_t{5}).op(Opcode::SSTORE).op(Opcode::STOP);
    }));

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    const CgNode* impl = find_node(g, kB, kSelB);
    REQUIRE(impl != nullptr);
    CHECK(impl->contract.storage_address == kA);  // the defining property

    // Every delegatecall edge preserves the caller's storage context.
    for (const auto& e : g.edges) {
        if (e.kind != CallKind::Delegatecall || !e.callee) continue;
        CHECK(g.nodes[*e.callee].contract.storage_address ==
              g.nodes[e.caller].contract.storage_address);
    }

    // Its storage write is therefore keyed by A's address, and unifies with
    // facts A emits about the same slot.
    const auto stores = impl->facts.query("StoreSlot", {std::nullopt, std::nullopt});
    REQUIRE(stores.size() == 1);
    CHECK(impl->facts.names_of(stores[0])[0] == ir::slot_sym(kA.hex(), Word(5)));
}

TEST_CASE("a forwarding proxy passes its own entry selector to the callee") {
    // The proxy has no dispatcher: it copies calldata verbatim and
    // delegatecalls a fixed implementation. Entering it with balanceOf must
    // produce an implementation node entered with balanceOf as well.
    fixture::Asm p;
    p.op(Opcode::CALLDATASIZE).push(uint64_t{0}).push(uint64_t{0});
    p.op(Opcode::CALLDATACOPY);
    p.push(uint64_t{0}).push(uint64_t{0});
    p.op(Opcode::CALLDATASIZE).push(uint64_t{0});
    p.push(kB.to_word());
    p.op(Opcode::GAS).op(Opcode::DELEGATECALL);
    p.op(Opcode::POP).op(Opcode::STOP);

    MemoryState state;
    state.put_code(kProxy, p.assemble());
    state.put_code(kB, contract(kBalanceOf, [](fixture::Asm& a) {
        a.push(uint64_t{2}).op(Opcode::SLOAD);
        a.push(uint64_t{0}).op(Opcode::MSTORE);
        a.push(uint64_t{32}).push(uint64_t{0}).op(Opcode::RETURN);
    }));

    const SubCallGraph g =
        build_scg(ref_of(kProxy), Selector::from_u32(kBalanceOf), state);
    check_graph(g);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.nodes[g.root].selector.as_u32() == kBalanceOf);

    const CgEdge& e = g.edges[0];
    CHECK(e.kind == CallKind::Delegatecall);
    CHECK(e.resolution == Resolution::ConstPush);
    CHECK(e.selector->as_u32() == kBalanceOf);  // restored from the entry

    const CgNode& impl = g.nodes[*e.callee];
    CHECK(impl.contract.logic_address == kB);
    CHECK(impl.contract.storage_address == kProxy);
    CHECK(impl.selector.as_u32() == kBalanceOf);
    CHECK(!impl.stub);

    // The proxied read resolves against the proxy's storage.
    const auto loads = impl.facts.query("LoadSlot", {std::nullopt, std::nullopt});
    REQUIRE(loads.size() == 1);
    CHECK(impl.facts.names_of(loads[0])[0] == ir::slot_sym(kProxy.hex(), Word(2)));
}

TEST_CASE("parameter-passed targets resolve from callers in the graph") {
    // A calls the router, passing the real callee's address as argument 0;
    // the router forwards to whatever address it was handed. The router's
    // call site resolves only once A is in the graph — the alternation.
    MemoryState state;
    state.put_code(kRouter, contract(kSelRoute, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL,
                  [](fixture::Asm& b) { b.push(uint64_t{4}).op(Opcode::CALLDATALOAD); });
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kSelB, [](fixture::Asm& a) {
        a.push(uint64_t{1}).push(uint64_t{0}).op(Opcode::SSTORE).op(Opcode::STOP);
    }));

    auto route_and_check = [&](const std::function<void(fixture::Asm&)>& stage_arg0) {
        state.put_code(kA, contract(kSelA, [&](fixture::Asm& a) {
            a.push(selector_word(kSelRoute)).push(uint64_t{0}).op(Opcode::MSTORE);
            stage_arg0(a);  // writes argument 0 at offset 4
            a.push(uint64_t{0}).push(uint64_t{0});       // ret region
            a.push(uint64_t{0x24}).push(uint64_t{0});    // args region
            a.push(uint64_t{0});                         // value
            push_const(a, kRouter);
            a.op(Opcode::GAS).op(Opcode::CALL).op(Opcode::POP).op(Opcode::STOP);
        }));

        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
        check_graph(g);
        REQUIRE(g.nodes.size() == 3);
        REQUIRE(g.edges.size() == 2);
        CHECK(g.rounds == 2);  // one expansion round, one dataflow round

        const CgEdge* hop = find_edge(g, kRouter, kB);
        REQUIRE(hop != nullptr);
        CHECK(hop->resolution == Resolution::Parameter);
        CHECK(hop->target == kB);
        CHECK(g.nodes[*hop->callee].selector.as_u32() == kSelB);
        CHECK(g.nodes[*hop->callee].depth == 2);
    };

    SUBCASE("the caller stages a constant address") {
        route_and_check([](fixture::Asm& a) {
            a.push(kB.to_word()).push(uint64_t{4}).op(Opcode::MSTORE);
        });
    }
    SUBCASE("the caller stages an address from its own storage") {
        state.put_storage(kA, Word(3), kB.to_word());
        route_and_check([](fixture::Asm& a) {
            a.push(uint64_t{3}).op(Opcode::SLOAD);
            a.push(uint64_t{4}).op(Opcode::MSTORE);
        });
    }
}

TEST_CASE("parameter sites nobody pins stay as unresolved edges") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL,
                  [](fixture::Asm& b) { b.push(uint64_t{4}).op(Opcode::CALLDATALOAD); });
        a.op(Opcode::STOP);
    }));

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    CHECK(g.nodes.size() == 1);  // the root has no caller to learn from
    REQUIRE(g.edges.size() == 1);
    CHECK(!g.edges[0].callee.has_value());
    CHECK(g.edges[0].resolution == Resolution::Parameter);
    CHECK(g.edges[0].selector->as_u32() == kSelB);  // still matchable
    CHECK(g.rounds <= 2);  // one pending site: bounded by 1 + 1
}

TEST_CASE("unfetchable callees become stub nodes with diagnostics") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kSelB, Opcode::CALL, [](fixture::Asm& b) { push_const(b, kB); });
        a.op(Opcode::STOP);
    }));

    SUBCASE("the provider fails outright") {
        state.fail_code_at(kB);
        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
        check_graph(g);
        REQUIRE(g.nodes.size() == 2);
        CHECK(g.nodes[1].stub);
        REQUIRE(g.edges.size() == 1);
        CHECK(g.edges[0].callee == NodeId{1});  // the stub is still linked
        REQUIRE(!g.diagnostics.empty());
        CHECK(g.diagnostics[0].find("code fetch failed") != std::string::npos);
    }
    SUBCASE("the target is an account without code") {
        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
        check_graph(g);
        REQUIRE(g.nodes.size() == 2);
        CHECK(g.nodes[1].stub);
        REQUIRE(!g.diagnostics.empty());
        CHECK(g.diagnostics[0].find("no code at") != std::string::npos);
    }
    SUBCASE("the callee exists but never dispatches that selector") {
        state.put_code(kB, contract(kSelC, [](fixture::Asm& a) { a.op(Opcode::STOP); }));
        const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
        check_graph(g);
        REQUIRE(g.nodes.size() == 2);
        CHECK(g.nodes[1].stub);
        REQUIRE(!g.diagnostics.empty());
        CHECK(g.diagnostics[0].find("not dispatched") != std::string::npos);
    }
}

TEST_CASE("an unusable root is an error, not a silent empty graph") {
    MemoryState state;
    SUBCASE("no code at the root address") {
        CHECK_THROWS_AS(build_scg(ref_of(kA), Selector::from_u32(kSelA), state), Error);
    }
    SUBCASE("root code never dispatches the requested selector") {
        state.put_code(kA, contract(kSelB, [](fixture::Asm& a) { a.op(Opcode::STOP); }));
        CHECK_THROWS_AS(build_scg(ref_of(kA), Selector::from_u32(kSelA), state), Error);
    }
}

TEST_CASE("graph export renders nodes, contexts, and edge labels") {
    MemoryState state;
    state.put_code(kA, contract(kSelA, [](fixture::Asm& a) {
        emit_call(a, kBalanceOf, Opcode::STATICCALL,
                  [](fixture::Asm& b) { b.push(uint64_t{0}).op(Opcode::SLOAD); });
        emit_call(a, kSelB, Opcode::DELEGATECALL, [](fixture::Asm& b) { push_const(b, kC); });
        emit_call(a, kSelC, Opcode::CALL,
                  [](fixture::Asm& b) { b.op(Opcode::CALLER); });  // never resolves
        a.op(Opcode::STOP);
    }));
    state.put_code(kB, contract(kBalanceOf, [](fixture::Asm& a) { a.op(Opcode::STOP); }));
    state.put_code(kC, contract(kSelB, [](fixture::Asm& a) { a.op(Opcode::STOP); }));
    state.put_storage(kA, Word(0), kB.to_word());

    const SubCallGraph g = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    check_graph(g);
    const std::string dot = export_graph(g);

    CHECK(dot.find("digraph scg {") == 0);
    CHECK(dot.find(kA.hex() + ":" + Selector::from_u32(kSelA).hex()) != std::string::npos);
    CHECK(dot.find("peripheries=2") != std::string::npos);
    CHECK(dot.find("staticcall storage_slot(0x0)") != std::string::npos);
    CHECK(dot.find("delegatecall const_push") != std::string::npos);
    CHECK(dot.find("call unresolved") != std::string::npos);
    CHECK(dot.find("shape=diamond") != std::string::npos);  // the CALLER target
    // The delegated node advertises the storage it actually runs against.
    CHECK(dot.find("\\nstorage " + kA.hex()) != std::string::npos);

    // Same inputs, same graph: the renderer is a pure function of it.
    const SubCallGraph h = build_scg(ref_of(kA), Selector::from_u32(kSelA), state);
    CHECK(export_graph(h) == dot);
    CHECK(h.diagnostics == g.diagnostics);
}
