// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evmtaint/bytecode.hpp"
#include "evmtaint/datalog.hpp"
#include "evmtaint/ir.hpp"
#include "evmtaint/state.hpp"
#include "evmtaint/word.hpp"

namespace evmtaint {

/// An execution context: whose code runs, and whose storage it runs against.
/// The two addresses differ only when the context was reached through
/// delegatecall/callcode, which borrow code while keeping the caller's state.
struct ContractRef {
    Address logic_address;
    Address storage_address;
    uint64_t block = 0;

    friend bool operator==(const ContractRef&, const ContractRef&) = default;
    auto operator<=>(const ContractRef&) const = default;
};

using NodeId = uint32_t;

/// One function in the graph, unique per (logic, storage, selector) triple.
/// The same implementation reached under two storage contexts is two nodes,
/// because its storage reads resolve differently in each.
struct CgNode {
    ContractRef contract;
    Selector selector;     // selector the context is entered with
    uint32_t depth = 0;    // call distance from the root at first encounter
    bool stub = false;     // code or entry unavailable: no facts, not expanded
    std::string fact_tag;  // symbol namespace of this node inside `facts`
    ir::LiftedFunction fn;
    datalog::FactBase facts;  // relational encoding; empty for stubs
};

/// One call site linked into the graph. `callee` is empty when the target
/// could not be pinned to a node (unknown address, unknown selector, or a
/// node budget cut); whatever was recovered is still recorded so selector
/// level matching keeps working on unresolved edges.
struct CgEdge {
    NodeId caller = 0;
    uint32_t call_site = 0;  // index into the caller's fn.call_sites
    std::optional<NodeId> callee;
    ir::CallKind kind = ir::CallKind::Call;
    ir::Resolution resolution = ir::Resolution::Unresolved;
    std::optional<Address> target;     // code address, when recovered
    std::optional<Selector> selector;  // effective selector at the callee
};

struct Truncation {
    bool depth_limited = false;
    bool node_limited = false;
    uint32_t cycles_cut = 0;  // re-encounters of already-present nodes
};

struct ScgLimits {
    uint32_t max_depth = 5;
    uint32_t max_nodes = 64;
};

/// Sub-call graph of one entry point: every call directly or indirectly
/// reachable from (root contract, entry selector), within limits.
struct SubCallGraph {
    NodeId root = 0;
    std::vector<CgNode> nodes;
    std::vector<CgEdge> edges;
    Truncation truncation;
    std::vector<std::string> diagnostics;
    uint32_t rounds = 0;  // expansion/dataflow alternation rounds taken
};

/// Outcome of pinning one call site's target address.
struct TargetResolution {
    ir::Resolution kind = ir::Resolution::Unresolved;
    std::optional<Address> target;
    std::optional<uint32_t> arg_index;  // engaged for parameter targets
    std::string diagnostic;             // non-empty when a state fetch failed
};

/// Pins a call site's target using, in order: a constant address embedded in
/// the code; the low 20 bytes of a storage word at a constant slot (read
/// through `state` in the site's storage context); a calldata argument,
/// reported as parameter(index) for the graph builder to complete from
/// callers; otherwise unresolved. A storage fetch failure degrades to
/// unresolved with a diagnostic instead of failing the analysis.
TargetResolution resolve_call_target(const ir::CallSite& site, const ContractRef& contract,
                                     StateProvider& state);

/// Execution context of a callee: call/staticcall run the callee's code
/// against the callee's own storage; delegatecall/callcode run it against
/// the caller's storage.
ContractRef delegate_context(const ContractRef& caller, const Address& callee_code_addr,
                             ir::CallKind kind);

/// Builds SCG(root, entry): lifts the entry function, resolves its external
/// calls, recursively expands resolvable callees, and alternates expansion
/// with parameter-passing dataflow — a call whose target arrives as an
/// argument resolves once some caller in the graph passes a constant or
/// storage-resolved address at that position. Nodes are expanded at most
/// once; re-encounters only add edges. Code fetch failures become stub
/// nodes with diagnostics. Throws Error only when the root itself cannot
/// be fetched or its entry selector cannot be found.
SubCallGraph build_scg(const ContractRef& root_contract, const Selector& entry_selector,
                       StateProvider& state, const ScgLimits& limits = {});

/// Graphviz DOT rendering: nodes labelled "address:selector" (plus the
/// storage context when it differs), edges labelled with call kind and
/// resolution. Unresolved callees render as placeholder diamonds.
std::string export_graph(const SubCallGraph& scg);

}  // namespace evmtaint
