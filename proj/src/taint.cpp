// Taint closure over a sub-call-graph. The per-node fact bases are merged
// into one (symbol namespaces keep them apart), the call-graph structure is
// added as glue facts, the configured sources and sinks are staged as facts,
// and the rule program is run to fixpoint. Findings are then reconstructed
// per source call site so each one carries a replayable witness.
#include "evmtaint/taint.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "evmtaint/datalog.hpp"
#include "evmtaint/error.hpp"
#include "evmtaint/ir.hpp"
#include "json.hpp"

namespace evmtaint::taint {

namespace {

using datalog::FactBase;
using datalog::FactRef;
using datalog::Provenance;
using datalog::Tuple;

// ---------------------------------------------------------------------------
// Profiles

Selector sig_sel(const char* signature) {
    Selector s = selector_of(signature);
    s.text = signature;
    return s;
}

void normalize(TaintConfig& c) {
    std::sort(c.sources.begin(), c.sources.end());
    c.sources.erase(std::unique(c.sources.begin(), c.sources.end()), c.sources.end());
    std::sort(c.sinks.begin(), c.sinks.end(),
              [](const SinkSpec& a, const SinkSpec& b) { return a.selector < b.selector; });
}

TaintConfig builtin_baseline() {
    TaintConfig c;
    c.name = "baseline";
    c.sources = {sig_sel("balanceOf(address)")};
    c.sinks = {
        SinkSpec{sig_sel("transfer(address,uint256)"), {1}, false},
        SinkSpec{sig_sel("transferFrom(address,address,uint256)"), {2}, false},
    };
    normalize(c);
    return c;
}

TaintConfig builtin_expanded() {
    TaintConfig c;
    c.name = "expanded";
    c.sources = {
        sig_sel("balanceOf(address)"),
        sig_sel("approve(address,uint256)"),
        sig_sel("swap(address,int256,bool,uint160,bytes)"),
        sig_sel("allowance(address,address)"),
        sig_sel("totalSupply()"),
        sig_sel("swap(uint256,uint256,address,bytes)"),
        sig_sel("getReserves()"),
    };
    c.sinks = {
        SinkSpec{sig_sel("transfer(address,uint256)"), {1}, false},
        SinkSpec{sig_sel("transferFrom(address,address,uint256)"), {2}, false},
        SinkSpec{sig_sel("withdraw(uint256)"), {0}, false},
        SinkSpec{sig_sel("buy(uint256,uint256)"), {}, true},
        SinkSpec{sig_sel("sell(uint256,uint256)"), {}, true},
    };
    normalize(c);
    return c;
}

TaintConfig parse_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open profile '" + path +
                    "' (not a built-in either; built-ins are: baseline, expanded)");

    std::set<Selector> sources;
    std::map<Selector, SinkSpec> sinks;
    std::string line;
    size_t line_no = 0;
    const auto fail = [&](const std::string& msg) {
        throw Error("profile " + path + " line " + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::vector<std::string> tok;
        for (std::string w; words >> w;) tok.push_back(w);
        if (tok.empty()) continue;

        if (tok[0] != "source" && tok[0] != "sink")
            fail("expected 'source' or 'sink', got '" + tok[0] + "'");
        if (tok.size() < 2) fail("missing function signature");

        std::string sig = tok[1];
        std::optional<std::string> given_hex;
        if (const size_t eq = sig.find('='); eq != std::string::npos) {
            given_hex = sig.substr(eq + 1);
            sig.erase(eq);
        }
        size_t next = 2;
        if (!given_hex && next < tok.size() && tok[next].rfind("0x", 0) == 0)
            given_hex = tok[next++];

        Selector sel;
        try {
            sel = selector_of(sig);
        } catch (const Error& e) {
            fail(e.what());
        }
        sel.text = sig;
        if (given_hex) {
            const auto given = Selector::from_hex(*given_hex);
            if (!given) fail("bad selector literal '" + *given_hex + "'");
            if (!(*given == sel))
                fail("selector of " + sig + " is " + sel.hex() + ", but the profile says " +
                     given->hex());
        }

        if (tok[0] == "source") {
            if (next != tok.size()) fail("unexpected token '" + tok[next] + "'");
            sources.insert(sel);
            continue;
        }

        if (next >= tok.size() || tok[next].rfind("params=", 0) != 0)
            fail("sink entry needs params=<p0,p1,...|all>");
        const std::string value = tok[next++].substr(7);
        if (next != tok.size()) fail("unexpected token '" + tok[next] + "'");

        SinkSpec& spec = sinks.try_emplace(sel, SinkSpec{sel, {}, false}).first->second;
        if (value == "all") {
            spec.all_params = true;
        } else {
            if (value.empty()) fail("empty params list");
            std::istringstream list(value);
            for (std::string piece; std::getline(list, piece, ',');) {
                uint32_t pos = 0;
                const auto [ptr, ec] =
                    std::from_chars(piece.data(), piece.data() + piece.size(), pos);
                if (ec != std::errc{} || ptr != piece.data() + piece.size())
                    fail("bad parameter position '" + piece + "'");
                spec.params.insert(pos);
            }
        }
    }

    if (sources.empty() && sinks.empty())
        throw Error("profile " + path + " defines no sources or sinks");

    TaintConfig c;
    c.name = path;
    c.sources.assign(sources.begin(), sources.end());
    for (auto& entry : sinks) c.sinks.push_back(std::move(entry.second));
    normalize(c);
    return c;
}

// ---------------------------------------------------------------------------
// Rule program

constexpr std::string_view kRules = R"DL(# Taint closure over the relational encoding of lifted functions.
#
# Base facts come from two places. Each analyzed function contributes its
# dataflow encoding (Flow, StoreSlot/LoadSlot, MemWrite/MemRead/MayAlias,
# ExtCall, CallArgWord/CallArgRegion/CallForwards, CallRetValue, RetRegion,
# RegionOpaque, CalldataArg). The analyzer adds the active profile
# (SourceSel, SinkParam, SinkAnyParam), optional per-site seeds (SeedStmt),
# and the call-graph stitching (CallEdge, StmtNode, NodeCalldataArg,
# NodeCalldataAny, NodeCalldata, RetStmtNode).

# Return data of a call whose selector is a configured source is tainted.
Tainted(v) :- ExtCall(s, k, sel, t), SourceSel(sel), CallRetValue(s, v).
Tainted(v) :- SeedStmt(s), CallRetValue(s, v).

# Taint follows dataflow edges.
Tainted(v) :- Tainted(u), Flow(u, v).

# Storage round trip. Slot symbols carry the storage address, so delegatecall
# targets executing against the same storage share slot taint.
TaintedSlot(k) :- Tainted(v), StoreSlot(k, v).
Tainted(w) :- TaintedSlot(k), LoadSlot(k, w).

# Memory round trip through possibly overlapping regions.
TaintedRegion(r) :- Tainted(v), MemWrite(r, v).
TaintedRegion(q) :- TaintedRegion(r), MayAlias(r, q).
Tainted(w) :- TaintedRegion(r), MemRead(r, w).

# Taint enters a callee positionally when the caller staged the word at a
# decoded argument slot; calldata reads at unknown offsets may cover any
# position, so they pick up positional taint as well.
ArgTaint(n, p) :- CallEdge(s, n), CallArgWord(s, p, v), Tainted(v).
Tainted(w) :- ArgTaint(n, p), NodeCalldataArg(n, p, w).
Tainted(w) :- ArgTaint(n, p), NodeCalldataAny(n, w).

# A call that forwards its caller's calldata verbatim hands calldata taint
# straight through, both per position and wholesale.
ArgTaint(n, p) :- CallEdge(s, n), CallForwards(s), StmtNode(s, m), ArgTaint(m, p).
CalldataTaint(n) :- CallEdge(s, n), CallForwards(s), StmtNode(s, m), CalldataTaint(m).

# Taint spills over a callee's whole calldata when a tainted value was
# stored through an opaque pointer that may cover the argument region.
CalldataTaint(n) :- CallEdge(s, n), CallArgRegion(s, r), RegionOpaque(q), MemWrite(q, v), Tainted(v), MayAlias(q, r).
Tainted(w) :- CalldataTaint(n), NodeCalldata(n, w).

# Taint leaves a callee whose return payload overlaps a tainted region.
ReturnsTaint(n) :- RetStmtNode(s, n), RetRegion(s, r), TaintedRegion(r).
Tainted(v) :- CallEdge(s, n), ReturnsTaint(n), CallRetValue(s, v).

# A tainted word reaching a watched parameter of a sink call is a hit.
SinkHit(s, p) :- ExtCall(s, k, sel, t), SinkParam(sel, p), CallArgWord(s, p, v), Tainted(v).
SinkHit(s, p) :- ExtCall(s, k, sel, t), SinkAnyParam(sel), CallArgWord(s, p, v), Tainted(v).
)DL";

// Relations whose tuples are derived by the rules (at most one appears in any
// rule body, so the justification chain of a hit is a single path).
bool is_derived(const std::string& rel) {
    return rel == "Tainted" || rel == "TaintedSlot" || rel == "TaintedRegion" ||
           rel == "ArgTaint" || rel == "CalldataTaint" || rel == "ReturnsTaint" ||
           rel == "SinkHit";
}

// Relations staged from the profile or the per-run seed: configuration, not
// evidence, so they stay out of witnesses.
bool is_config(const std::string& rel) {
    return rel == "SourceSel" || rel == "SinkParam" || rel == "SinkAnyParam" ||
           rel == "SeedStmt";
}

// ---------------------------------------------------------------------------
// Fact assembly

void declare_extras(FactBase& fb) {
    fb.declare("SourceSel", 1);
    fb.declare("SinkParam", 2);
    fb.declare("SinkAnyParam", 1);
    fb.declare("SeedStmt", 1);
    fb.declare("CallEdge", 2);
    fb.declare("StmtNode", 2);
    fb.declare("NodeCalldataArg", 3);
    fb.declare("NodeCalldataAny", 2);
    fb.declare("NodeCalldata", 2);
    fb.declare("RetStmtNode", 2);
    fb.declare("Tainted", 1);
    fb.declare("TaintedSlot", 1);
    fb.declare("TaintedRegion", 1);
    fb.declare("ArgTaint", 2);
    fb.declare("CalldataTaint", 1);
    fb.declare("ReturnsTaint", 1);
    fb.declare("SinkHit", 2);
}

// Merged fact base: every node's facts plus the graph glue and sink seeds.
// Source seeding differs per run and is left to the caller.
FactBase merged_base(const SubCallGraph& scg, const TaintConfig& config) {
    FactBase fb;
    ir::declare_schema(fb);
    declare_extras(fb);

    for (const CgNode& n : scg.nodes) {
        if (n.stub) continue;
        if (n.facts.relation_names().empty())
            throw Error("call-graph node " + n.fact_tag +
                        " carries no facts; analyze needs the graph exactly as built");
        for (const std::string& rel : n.facts.relation_names())
            for (const Tuple& t : n.facts.tuples(rel)) fb.insert_names(rel, n.facts.names_of(t));
    }

    for (const CgEdge& e : scg.edges) {
        if (!e.callee) continue;
        const CgNode& caller = scg.nodes[e.caller];
        if (caller.stub) continue;
        const uint32_t stmt = caller.fn.statements[caller.fn.call_sites[e.call_site].statement].id;
        fb.insert_names("CallEdge",
                        {ir::stmt_sym(caller.fact_tag, stmt), scg.nodes[*e.callee].fact_tag});
    }

    for (const CgNode& n : scg.nodes) {
        if (n.stub) continue;
        // CALLDATACOPY values span a byte range: any position, never one word.
        std::set<ir::ValueId> spans;
        for (const ir::Statement& s : n.fn.statements) {
            if (s.kind == ir::StatementKind::Return)
                fb.insert_names("RetStmtNode", {ir::stmt_sym(n.fact_tag, s.id), n.fact_tag});
            if (s.kind == ir::StatementKind::ExternalCall)
                fb.insert_names("StmtNode", {ir::stmt_sym(n.fact_tag, s.id), n.fact_tag});
            if (s.kind == ir::StatementKind::Mstore && s.op == Opcode::CALLDATACOPY &&
                s.value != ir::kNoValue)
                spans.insert(s.value);
        }
        for (size_t v = 0; v < n.fn.values.size(); ++v) {
            const ir::ValueInfo& info = n.fn.values[v];
            if (info.origin != ir::Origin::Calldata) continue;
            const std::string vsym = ir::value_sym(n.fact_tag, static_cast<ir::ValueId>(v));
            fb.insert_names("NodeCalldata", {n.fact_tag, vsym});
            const bool spanning = !info.calldata_offset || spans.count(static_cast<ir::ValueId>(v));
            if (spanning) {
                fb.insert_names("NodeCalldataAny", {n.fact_tag, vsym});
            } else if (info.calldata_offset->fits_u64()) {
                const uint64_t off = info.calldata_offset->low_u64();
                if (off >= 4 && (off - 4) % 32 == 0)
                    fb.insert_names("NodeCalldataArg",
                                    {n.fact_tag, std::to_string((off - 4) / 32), vsym});
            }
        }
    }

    for (const SinkSpec& sink : config.sinks) {
        if (sink.all_params) {
            fb.insert_names("SinkAnyParam", {sink.selector.hex()});
            continue;
        }
        for (uint32_t p : sink.params)
            fb.insert_names("SinkParam", {sink.selector.hex(), std::to_string(p)});
    }

    return fb;
}

// ---------------------------------------------------------------------------
// Witness reconstruction

// "s" + "n<node>" + ":" + "<stmt>" back to (node, stmt).
std::optional<std::pair<NodeId, uint32_t>> parse_stmt_sym(const std::string& sym) {
    if (sym.size() < 4 || sym[0] != 's' || sym[1] != 'n') return std::nullopt;
    const size_t colon = sym.find(':', 2);
    if (colon == std::string::npos) return std::nullopt;
    NodeId node = 0;
    uint32_t stmt = 0;
    const char* nb = sym.data() + 2;
    const char* ne = sym.data() + colon;
    const char* sb = sym.data() + colon + 1;
    const char* se = sym.data() + sym.size();
    if (auto r = std::from_chars(nb, ne, node); r.ec != std::errc{} || r.ptr != ne)
        return std::nullopt;
    if (auto r = std::from_chars(sb, se, stmt); r.ec != std::errc{} || r.ptr != se)
        return std::nullopt;
    return std::make_pair(node, stmt);
}

// Follows the recorded first derivation of `goal` back to its seed. Each
// rule has at most one derived premise, so the chain is a path; the static
// premises along it become the witness hops, source end first.
std::vector<WitnessHop> trace_witness(const Provenance& prov, const FactBase& model,
                                      FactRef goal) {
    std::vector<std::vector<WitnessHop>> steps;  // sink end first
    FactRef cur = std::move(goal);
    size_t guard = 0;
    while (guard++ < 100000) {
        const auto it = prov.derivations.find(cur);
        if (it == prov.derivations.end()) break;
        std::optional<FactRef> deeper;
        std::vector<WitnessHop> step;
        for (const FactRef& premise : it->second.second) {
            if (is_derived(premise.first) && prov.derivations.count(premise)) {
                deeper = premise;
            } else if (!is_config(premise.first)) {
                step.push_back({premise.first, model.names_of(premise.second)});
            }
        }
        steps.push_back(std::move(step));
        if (!deeper) break;
        cur = *deeper;
    }
    std::vector<WitnessHop> hops;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
        hops.insert(hops.end(), std::make_move_iterator(it->begin()),
                    std::make_move_iterator(it->end()));
    return hops;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::string& rules_text() {
    static const std::string text{kRules};
    return text;
}

const char* verdict_name(Verdict v) noexcept {
    return v == Verdict::Vulnerable ? "vulnerable" : "not_detected";
}

TaintConfig load_profile(const std::string& name_or_path) {
    if (name_or_path == "baseline") return builtin_baseline();
    if (name_or_path == "expanded") return builtin_expanded();
    return parse_profile_file(name_or_path);
}

DetectionReport analyze(const SubCallGraph& scg, const TaintConfig& config) {
    if (scg.nodes.empty() || scg.root >= scg.nodes.size())
        throw Error("cannot analyze an empty call graph");

    DetectionReport report;
    const CgNode& root = scg.nodes[scg.root];
    report.logic_address = root.contract.logic_address;
    report.storage_address = root.contract.storage_address;
    report.block = root.contract.block;
    report.selector = root.selector;
    report.profile = config.name;
    report.tool_version = EVMTAINT_VERSION;
    report.diagnostics = scg.diagnostics;

    report.stats.nodes = static_cast<uint32_t>(scg.nodes.size());
    report.stats.edges = static_cast<uint32_t>(scg.edges.size());
    for (const CgEdge& e : scg.edges)
        if (!e.callee) ++report.stats.unresolved_calls;
    report.stats.rounds = scg.rounds;
    report.stats.depth_limited = scg.truncation.depth_limited;
    report.stats.node_limited = scg.truncation.node_limited;
    report.stats.cycles_cut = scg.truncation.cycles_cut;

    const FactBase base = merged_base(scg, config);
    const std::vector<datalog::Rule> rules = datalog::parse_rules(rules_text());

    // Whole-profile closure: model size for the stats. (Each rule uses at
    // most one derived premise, so this model equals the union of the
    // per-source models below; findings never disagree with it.)
    {
        FactBase seeded = base;
        for (const Selector& s : config.sources) seeded.insert_names("SourceSel", {s.hex()});
        const FactBase model = datalog::run_to_fixpoint(std::move(seeded), rules);
        report.stats.facts = model.total_facts();
    }

    // Call-site index by statement id, per node, for finding extraction.
    std::vector<std::map<uint32_t, uint32_t>> site_by_stmt(scg.nodes.size());
    for (size_t nid = 0; nid < scg.nodes.size(); ++nid)
        for (size_t i = 0; i < scg.nodes[nid].fn.call_sites.size(); ++i) {
            const ir::CallSite& cs = scg.nodes[nid].fn.call_sites[i];
            site_by_stmt[nid][scg.nodes[nid].fn.statements[cs.statement].id] =
                static_cast<uint32_t>(i);
        }

    struct SourceSite {
        NodeId node;
        uint32_t site;
        Selector selector;
        std::string stmt;
    };
    std::vector<SourceSite> source_sites;
    for (size_t nid = 0; nid < scg.nodes.size(); ++nid) {
        const CgNode& n = scg.nodes[nid];
        if (n.stub) continue;
        for (size_t i = 0; i < n.fn.call_sites.size(); ++i) {
            const ir::CallSite& cs = n.fn.call_sites[i];
            if (!cs.resolved_selector) continue;
            if (!std::binary_search(config.sources.begin(), config.sources.end(),
                                    *cs.resolved_selector))
                continue;
            source_sites.push_back({static_cast<NodeId>(nid), static_cast<uint32_t>(i),
                                    *cs.resolved_selector,
                                    ir::stmt_sym(n.fact_tag, n.fn.statements[cs.statement].id)});
        }
    }

    // One closure per source call site keeps findings attributable: every
    // sink hit in a run is reached from that run's seed alone.
    std::map<std::tuple<NodeId, uint32_t, NodeId, uint32_t, uint32_t>, Finding> findings;
    for (const SourceSite& src : source_sites) {
        FactBase seeded = base;
        seeded.insert_names("SeedStmt", {src.stmt});
        Provenance prov;
        const FactBase model = datalog::run_to_fixpoint(std::move(seeded), rules, nullptr, &prov);

        for (const Tuple& hit : model.tuples("SinkHit")) {
            const std::vector<std::string> names = model.names_of(hit);
            const auto sink_loc = parse_stmt_sym(names[0]);
            if (!sink_loc) continue;
            const auto [sink_node, sink_stmt] = *sink_loc;
            if (sink_node >= scg.nodes.size()) continue;
            const auto site_it = site_by_stmt[sink_node].find(sink_stmt);
            if (site_it == site_by_stmt[sink_node].end()) continue;
            const ir::CallSite& sink_cs = scg.nodes[sink_node].fn.call_sites[site_it->second];
            if (!sink_cs.resolved_selector) continue;

            uint32_t param = 0;
            if (auto r = std::from_chars(names[1].data(), names[1].data() + names[1].size(), param);
                r.ec != std::errc{})
                continue;

            const auto key =
                std::make_tuple(src.node, src.site, sink_node, site_it->second, param);
            if (findings.count(key)) continue;

            Finding f;
            f.source_node = src.node;
            f.source_site = src.site;
            f.source_selector = src.selector;
            f.sink_node = sink_node;
            f.sink_site = site_it->second;
            f.sink_selector = *sink_cs.resolved_selector;
            f.param = param;
            // Open with the source call row itself, then the recorded chain.
            const auto call_rows = model.query(
                "ExtCall", {src.stmt, std::nullopt, std::nullopt, std::nullopt});
            if (!call_rows.empty()) f.witness.push_back({"ExtCall", model.names_of(call_rows[0])});
            std::vector<WitnessHop> chain = trace_witness(prov, model, FactRef{"SinkHit", hit});
            f.witness.insert(f.witness.end(), std::make_move_iterator(chain.begin()),
                             std::make_move_iterator(chain.end()));
            findings.emplace(key, std::move(f));
        }
    }

    for (auto& [key, f] : findings) report.findings.push_back(std::move(f));
    report.verdict = report.findings.empty() ? Verdict::NotDetected : Verdict::Vulnerable;
    return report;
}

std::string to_json(const DetectionReport& r) {
    using nlohmann::json;
    json doc;
    doc["root"] = {
        {"logic_address", r.logic_address.hex()},
        {"storage_address", r.storage_address.hex()},
        {"block", r.block},
        {"selector", r.selector.hex()},
    };
    doc["verdict"] = verdict_name(r.verdict);
    doc["profile"] = r.profile;
    doc["tool_version"] = r.tool_version;
    doc["diagnostics"] = r.diagnostics;
    doc["stats"] = {
        {"nodes", r.stats.nodes},
        {"edges", r.stats.edges},
        {"unresolved_calls", r.stats.unresolved_calls},
        {"facts", r.stats.facts},
        {"rounds", r.stats.rounds},
        {"depth_limited", r.stats.depth_limited},
        {"node_limited", r.stats.node_limited},
        {"cycles_cut", r.stats.cycles_cut},
    };
    doc["findings"] = json::array();
    for (const Finding& f : r.findings) {
        json witness = json::array();
        for (const WitnessHop& hop : f.witness)
            witness.push_back({{"relation", hop.relation}, {"tuple", hop.tuple}});
        doc["findings"].push_back({
            {"source", {{"node", f.source_node},
                        {"site", f.source_site},
                        {"selector", f.source_selector.hex()}}},
            {"sink", {{"node", f.sink_node},
                      {"site", f.sink_site},
                      {"selector", f.sink_selector.hex()}}},
            {"param", f.param},
            {"witness", std::move(witness)},
        });
    }
    return doc.dump(2) + "\n";
}

}  // namespace evmtaint::taint
