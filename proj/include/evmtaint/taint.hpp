// Taint analysis over a sub-call-graph: configurable source/sink profiles,
// a shipped rule program, findings with replayable witnesses, and a
// canonical JSON report.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "evmtaint/bytecode.hpp"
#include "evmtaint/callgraph.hpp"

namespace evmtaint::taint {

/// One sink entry: a selector plus the watched word-parameter positions.
struct SinkSpec {
    Selector selector;
    std::set<uint32_t> params;  ///< watched positions; ignored when all_params
    bool all_params = false;    ///< watch every staged word parameter
};

/// Which selectors produce attacker-influenced data (sources) and which
/// parameter positions must never receive it (sinks).
struct TaintConfig {
    std::string name;               ///< "baseline", "expanded", or a file path
    std::vector<Selector> sources;  ///< sorted, unique
    std::vector<SinkSpec> sinks;    ///< sorted by selector, unique
};

/// Built-in profiles by name ("baseline", "expanded"); any other argument is
/// read as a profile file with lines
///     source <signature> [<selector>]
///     sink <signature> [<selector>] params=<p0,p1,...|all>
/// and `#` comments. `<sig>=<selector>` is accepted as a single token. A
/// selector written next to a signature must equal the selector derived from
/// the signature itself; a mismatch is an error naming both values.
TaintConfig load_profile(const std::string& name_or_path);

/// The rule program driving the closure (the contents of rules/taint.dl).
const std::string& rules_text();

/// One step of evidence: a relation tuple from the sealed fact base that
/// justified a propagation step.
struct WitnessHop {
    std::string relation;
    std::vector<std::string> tuple;
    friend bool operator==(const WitnessHop&, const WitnessHop&) = default;
};

/// A source-to-sink path. Sites are call-site indices within their node's
/// lifted function. The witness runs from the source call to the sink call.
struct Finding {
    NodeId source_node = 0;
    uint32_t source_site = 0;
    Selector source_selector;
    NodeId sink_node = 0;
    uint32_t sink_site = 0;
    Selector sink_selector;
    uint32_t param = 0;  ///< watched word position that received taint
    std::vector<WitnessHop> witness;
};

enum class Verdict { NotDetected, Vulnerable };
const char* verdict_name(Verdict v) noexcept;  // "not_detected" / "vulnerable"

struct AnalysisStats {
    uint32_t nodes = 0;
    uint32_t edges = 0;
    uint32_t unresolved_calls = 0;
    uint64_t facts = 0;   ///< model size after the closure
    uint32_t rounds = 0;  ///< call-graph expansion rounds
    bool depth_limited = false;
    bool node_limited = false;
    uint32_t cycles_cut = 0;
};

struct DetectionReport {
    Address logic_address;
    Address storage_address;
    uint64_t block = 0;
    Selector selector;
    Verdict verdict = Verdict::NotDetected;
    std::vector<Finding> findings;  ///< deterministic order, deduplicated
    AnalysisStats stats;
    std::string profile;
    std::string tool_version;
    std::vector<std::string> diagnostics;
};

/// Runs the taint closure over a built sub-call-graph. Every non-stub node
/// must still carry the fact base produced by build_scg; a graph stripped of
/// facts is rejected.
DetectionReport analyze(const SubCallGraph& scg, const TaintConfig& config);

/// Canonical JSON: object keys sorted, two-space indent, trailing newline.
/// Equal reports serialize byte-identically.
std::string to_json(const DetectionReport& report);

}  // namespace evmtaint::taint
