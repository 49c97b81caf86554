// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/callgraph.hpp"

#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

#include "evmtaint/cfg.hpp"
#include "evmtaint/error.hpp"

namespace evmtaint {

namespace {

constexpr NodeId kNoNode = UINT32_MAX;

std::string word_short_hex(const Word& w) {
    return w.fits_u64() ? hex_quantity(w.low_u64()) : w.hex();
}

std::string describe(const ContractRef& ref) {
    std::string s = ref.logic_address.hex();
    if (ref.storage_address != ref.logic_address) s += "[storage " + ref.storage_address.hex() + "]";
    return s;
}

}  // namespace

ContractRef delegate_context(const ContractRef& caller, const Address& callee_code_addr,
                             ir::CallKind kind) {
    ContractRef out;
    out.logic_address = callee_code_addr;
    out.block = caller.block;
    const bool borrows_code =
        kind == ir::CallKind::Delegatecall || kind == ir::CallKind::Callcode;
    out.storage_address = borrows_code ? caller.storage_address : callee_code_addr;
    return out;
}

TargetResolution resolve_call_target(const ir::CallSite& site, const ContractRef& contract,
                                     StateProvider& state) {
    TargetResolution out;
    switch (site.resolution) {
        case ir::Resolution::ConstPush:
            out.kind = ir::Resolution::ConstPush;
            out.target = site.resolved_target;
            break;
        case ir::Resolution::StorageSlot:
            try {
                const Word w =
                    state.get_storage(contract.storage_address, *site.storage_slot, contract.block);
                out.kind = ir::Resolution::StorageSlot;
                out.target = Address::from_word(w);
            } catch (const Error& e) {
                out.kind = ir::Resolution::Unresolved;
                out.diagnostic = "call target in slot " + word_short_hex(*site.storage_slot) +
                                 " of " + contract.storage_address.hex() +
                                 " unavailable: " + e.what();
            }
            break;
        case ir::Resolution::Parameter:
            out.kind = ir::Resolution::Parameter;
            out.arg_index = site.arg_index;
            break;
        case ir::Resolution::Unresolved:
            break;
    }
    return out;
}

namespace {

/// Parameter-resolved call site awaiting a caller that pins its target.
struct PendingSite {
    NodeId caller = 0;
    uint32_t site = 0;
    uint32_t arg = 0;
    std::set<Address> linked;  // targets already turned into edges
};

struct Builder {
    StateProvider& state;
    const ScgLimits limits;
    SubCallGraph g;

    std::map<std::tuple<Address, Address, Selector>, NodeId> index;
    std::deque<NodeId> worklist;
    std::vector<PendingSite> pending;
    std::set<std::tuple<NodeId, uint32_t, NodeId>> edge_keys;

    Builder(StateProvider& s, const ScgLimits& l) : state(s), limits(l) {}

    void add_edge(CgEdge e) {
        const NodeId callee = e.callee.value_or(kNoNode);
        if (!edge_keys.emplace(e.caller, e.call_site, callee).second) return;
        g.edges.push_back(std::move(e));
    }

    /// Fills in a freshly created node: fetch code, locate the entry for the
    /// node's selector (falling back to the whole-code entry of dispatcher
    /// less contracts), lift it, and seal its facts. Any failure leaves a
    /// stub carrying a diagnostic.
    void lift_node(NodeId id) {
        CgNode& node = g.nodes[id];
        Bytecode code;
        try {
            code = state.get_code(node.contract.logic_address, node.contract.block);
        } catch (const Error& e) {
            node.stub = true;
            g.diagnostics.push_back("code fetch failed for " + describe(node.contract) + ": " +
                                    e.what());
            return;
        }
        if (code.empty()) {
            node.stub = true;
            g.diagnostics.push_back("no code at " + describe(node.contract) + " (block " +
                                    std::to_string(node.contract.block) + ")");
            return;
        }
        const Cfg cfg = resolve_jumps(build_cfg(disassemble(code)));
        const auto functions = extract_public_functions(cfg);
        const PublicFunction* entry = nullptr;
        for (const auto& f : functions) {
            if (f.selector == node.selector) entry = &f;
        }
        if (!entry) {
            // A contract without a dispatcher runs the same body for every
            // selector (fallback-only contracts, forwarding proxies).
            for (const auto& f : functions) {
                if (f.entry_block == cfg.entry && f.selector == Selector::from_u32(0)) entry = &f;
            }
        }
        if (!entry) {
            node.stub = true;
            g.diagnostics.push_back("selector " + node.selector.hex() + " not dispatched by " +
                                    describe(node.contract));
            return;
        }
        node.fn = ir::lift_function(*entry, cfg);
        node.fact_tag = "n" + std::to_string(id);
        ir::declare_schema(node.facts);
        ir::emit_facts(node.fn, node.facts, node.fact_tag, node.contract.storage_address.hex());
    }

    /// Returns the node for (context, selector), creating and lifting it on
    /// first encounter. `existed` reports re-encounters so the caller can
    /// count the cut. Returns kNoNode when the node budget is exhausted.
    NodeId get_or_create(const ContractRef& ref, const Selector& sel, uint32_t depth,
                         bool& existed) {
        const auto key = std::make_tuple(ref.logic_address, ref.storage_address, sel);
        if (auto it = index.find(key); it != index.end()) {
            existed = true;
            return it->second;
        }
        existed = false;
        if (g.nodes.size() >= limits.max_nodes) {
            g.truncation.node_limited = true;
            return kNoNode;
        }
        const NodeId id = static_cast<NodeId>(g.nodes.size());
        CgNode node;
        node.contract = ref;
        node.selector = sel;
        node.depth = depth;
        g.nodes.push_back(std::move(node));
        index.emplace(key, id);
        lift_node(id);
        if (!g.nodes[id].stub) worklist.push_back(id);
        return id;
    }

    /// The selector a callee would dispatch on: either staged into the args
    /// region, or — for verbatim calldata forwarding — the selector the
    /// caller itself was entered with.
    static std::optional<Selector> effective_selector(const CgNode& caller,
                                                      const ir::CallSite& site) {
        if (site.resolved_selector) return site.resolved_selector;
        if (site.forwards_calldata) return caller.selector;
        return std::nullopt;
    }

    /// Connects one resolved target: builds the callee context, creates or
    /// finds its node, and records the edge. Budget cuts and unknown
    /// selectors degrade to an unresolved edge that keeps the recovered
    /// address and selector.
    void link(NodeId caller, uint32_t site_idx, ir::Resolution how, const Address& target) {
        const ir::CallSite& site = g.nodes[caller].fn.call_sites[site_idx];
        const ir::CallKind kind = site.kind;
        const std::optional<Selector> sel = effective_selector(g.nodes[caller], site);
        if (!sel) {
            add_edge({caller, site_idx, std::nullopt, kind, how, target, std::nullopt});
            return;
        }
        const ContractRef callee_ref = delegate_context(g.nodes[caller].contract, target, kind);
        bool existed = false;
        const NodeId callee =
            get_or_create(callee_ref, *sel, g.nodes[caller].depth + 1, existed);
        if (callee == kNoNode) {
            add_edge({caller, site_idx, std::nullopt, kind, how, target, sel});
            return;
        }
        if (existed) ++g.truncation.cycles_cut;
        add_edge({caller, site_idx, callee, kind, how, target, sel});
    }

    /// Processes every call site of one node. Nodes at the depth limit only
    /// record their sites as unresolved edges; nothing beyond them is
    /// fetched or lifted.
    void expand(NodeId id) {
        const size_t site_count = g.nodes[id].fn.call_sites.size();
        if (g.nodes[id].depth >= limits.max_depth) {
            if (site_count > 0) g.truncation.depth_limited = true;
            for (uint32_t i = 0; i < site_count; ++i) {
                const ir::CallSite& site = g.nodes[id].fn.call_sites[i];
                add_edge({id, i, std::nullopt, site.kind, ir::Resolution::Unresolved, std::nullopt,
                          effective_selector(g.nodes[id], site)});
            }
            return;
        }
        for (uint32_t i = 0; i < site_count; ++i) {
            // Re-read through the index: link() may grow g.nodes.
            const TargetResolution res =
                resolve_call_target(g.nodes[id].fn.call_sites[i], g.nodes[id].contract, state);
            if (!res.diagnostic.empty()) g.diagnostics.push_back(res.diagnostic);
            if (res.target) {
                link(id, i, res.kind, *res.target);
            } else if (res.kind == ir::Resolution::Parameter) {
                pending.push_back({id, i, res.arg_index.value_or(0), {}});
            } else {
                const ir::CallSite& site = g.nodes[id].fn.call_sites[i];
                add_edge({id, i, std::nullopt, site.kind, ir::Resolution::Unresolved, std::nullopt,
                          effective_selector(g.nodes[id], site)});
            }
        }
    }

    /// Constant or storage-resolved word a caller stages at `arg` of the
    /// call that enters `callee`; empty when the argument is dynamic.
    std::optional<Word> caller_argument(const CgEdge& e, uint32_t arg) {
        const CgNode& parent = g.nodes[e.caller];
        if (parent.stub) return std::nullopt;
        const ir::CallSite& site = parent.fn.call_sites[e.call_site];
        for (const auto& [pos, vid] : site.staged_args) {
            if (pos != arg) continue;
            const ir::ValueInfo& info = parent.fn.values[vid];
            if (info.const_value) return info.const_value;
            if (info.origin == ir::Origin::Sload && info.sload_slot) {
                try {
                    return state.get_storage(parent.contract.storage_address, *info.sload_slot,
                                             parent.contract.block);
                } catch (const Error& err) {
                    g.diagnostics.push_back("argument in slot " + word_short_hex(*info.sload_slot) +
                                            " of " + parent.contract.storage_address.hex() +
                                            " unavailable: " + err.what());
                }
            }
        }
        return std::nullopt;
    }

    /// One dataflow pass over parameter-resolved sites: for each, gather the
    /// addresses currently passed at its argument position by callers already
    /// in the graph, and link any new ones. Returns whether an edge was added.
    bool pass_pending() {
        bool progress = false;
        for (size_t pi = 0; pi < pending.size(); ++pi) {
            std::vector<Address> candidates;
            {
                const PendingSite& p = pending[pi];
                const size_t edge_count = g.edges.size();
                for (size_t ei = 0; ei < edge_count; ++ei) {
                    const CgEdge& e = g.edges[ei];
                    if (!e.callee || *e.callee != p.caller) continue;
                    if (const auto w = caller_argument(e, p.arg)) {
                        candidates.push_back(Address::from_word(*w));
                    }
                }
            }
            for (const Address& a : candidates) {
                if (!pending[pi].linked.insert(a).second) continue;
                link(pending[pi].caller, pending[pi].site, ir::Resolution::Parameter, a);
                progress = true;
            }
        }
        return progress;
    }

    SubCallGraph run(const ContractRef& root, const Selector& entry) {
        bool existed = false;
        g.root = get_or_create(root, entry, 0, existed);
        if (g.root == kNoNode) {
            throw Error("node budget of zero leaves no room for the entry point");
        }
        if (g.nodes[g.root].stub) {
            throw Error("cannot analyze " + describe(root) + " selector " + entry.hex() + ": " +
                        (g.diagnostics.empty() ? std::string("unavailable") : g.diagnostics.back()));
        }
        // Alternate graph expansion with parameter dataflow until neither
        // makes progress. Each productive pass pins at least one new target,
        // so the round count stays within pending-site count + 1.
        while (true) {
            while (!worklist.empty()) {
                const NodeId id = worklist.front();
                worklist.pop_front();
                expand(id);
            }
            ++g.rounds;
            if (g.rounds > pending.size() + 1) break;
            if (!pass_pending()) break;
        }
        // Parameter sites no caller could pin stay visible as unresolved
        // edges (selector-level matching still applies to them).
        for (const PendingSite& p : pending) {
            if (!p.linked.empty()) continue;
            const ir::CallSite& site = g.nodes[p.caller].fn.call_sites[p.site];
            add_edge({p.caller, p.site, std::nullopt, site.kind, ir::Resolution::Parameter,
                      std::nullopt, effective_selector(g.nodes[p.caller], site)});
        }
        return std::move(g);
    }
};

}  // namespace

SubCallGraph build_scg(const ContractRef& root_contract, const Selector& entry_selector,
                       StateProvider& state, const ScgLimits& limits) {
    Builder b(state, limits);
    return b.run(root_contract, entry_selector);
}

std::string export_graph(const SubCallGraph& scg) {
    std::ostringstream out;
    out << "digraph scg {\n";
    out << "  rankdir=LR;\n";
    for (NodeId id = 0; id < scg.nodes.size(); ++id) {
        const CgNode& n = scg.nodes[id];
        out << "  n" << id << " [label=\"" << n.contract.logic_address.hex() << ":"
            << n.selector.hex();
        if (n.contract.storage_address != n.contract.logic_address) {
            out << "\\nstorage " << n.contract.storage_address.hex();
        }
        out << "\"";
        if (id == scg.root) out << ", peripheries=2";
        if (n.stub) out << ", style=dashed";
        out << "];\n";
    }
    uint32_t placeholder = 0;
    for (const CgEdge& e : scg.edges) {
        std::string head;
        if (e.callee) {
            head = "n" + std::to_string(*e.callee);
        } else {
            head = "u" + std::to_string(placeholder++);
            std::string label = (e.target ? e.target->hex() : std::string("?")) + ":" +
                                (e.selector ? e.selector->hex() : std::string("?"));
            out << "  " << head << " [label=\"" << label << "\", shape=diamond];\n";
        }
        out << "  n" << e.caller << " -> " << head << " [label=\"" << ir::call_kind_name(e.kind)
            << " ";
        const ir::CallSite& site = scg.nodes[e.caller].fn.call_sites[e.call_site];
        switch (e.resolution) {
            case ir::Resolution::ConstPush:
                out << "const_push";
                break;
            case ir::Resolution::StorageSlot:
                out << "storage_slot(";
                if (site.storage_slot) out << word_short_hex(*site.storage_slot);
                out << ")";
                break;
            case ir::Resolution::Parameter:
                out << "parameter(";
                if (site.arg_index) out << *site.arg_index;
                out << ")";
                break;
            case ir::Resolution::Unresolved:
                out << "unresolved";
                break;
        }
        out << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace evmtaint
