// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evmtaint/error.hpp"

namespace evmtaint::datalog {

/// Interned constant. Ids are assigned in first-seen order, so identical
/// input sequences produce identical ids.
using Symbol = int32_t;

class SymbolTable {
  public:
    Symbol intern(std::string_view name);
    std::optional<Symbol> find(std::string_view name) const;
    const std::string& name(Symbol s) const { return names_.at(static_cast<size_t>(s)); }
    size_t size() const { return names_.size(); }

  private:
    std::vector<std::string> names_;
    std::map<std::string, Symbol, std::less<>> ids_;
};

using Tuple = std::vector<Symbol>;

/// Named sets of fixed-arity tuples. Append-only; arities are fixed at
/// declaration.
class FactBase {
  public:
    void declare(const std::string& relation, size_t arity);
    bool is_declared(const std::string& relation) const;
    size_t arity(const std::string& relation) const;

    /// Inserts a tuple; returns true if it was not already present.
    bool insert(const std::string& relation, Tuple tuple);
    /// Interns the names and inserts the resulting tuple. Separately named so
    /// braced string lists never collide with Tuple's iterator-pair ctor.
    bool insert_names(const std::string& relation, const std::vector<std::string>& symbols);

    bool contains(const std::string& relation, const Tuple& tuple) const;
    const std::set<Tuple>& tuples(const std::string& relation) const;

    /// All tuples matching a pattern (std::nullopt = wildcard), sorted by
    /// symbol names. Unknown relation is an error.
    std::vector<Tuple> query(const std::string& relation,
                             const std::vector<std::optional<std::string>>& pattern) const;

    std::vector<std::string> relation_names() const;  // sorted
    size_t total_facts() const;

    SymbolTable& symbols() { return symbols_; }
    const SymbolTable& symbols() const { return symbols_; }

    std::string name_of(Symbol s) const { return symbols_.name(s); }
    std::vector<std::string> names_of(const Tuple& t) const;

    /// Tab-separated dump of one relation, rows sorted by symbol names.
    std::string dump_tsv(const std::string& relation) const;

  private:
    struct Relation {
        size_t arity = 0;
        std::set<Tuple> tuples;
    };

    SymbolTable symbols_;
    std::map<std::string, Relation> relations_;

    friend FactBase run_to_fixpoint(FactBase base, const std::vector<struct Rule>& rules,
                                    struct FixpointStats* stats, struct Provenance* provenance);
};

struct Term {
    bool is_variable = false;
    int variable = -1;   // per-rule variable id, valid when is_variable
    std::string text;    // constant spelling or variable name
};

struct Atom {
    std::string relation;
    std::vector<Term> terms;
};

/// Horn clause: head :- body. Range-restricted and negation-free by
/// construction of the parser.
struct Rule {
    Atom head;
    std::vector<Atom> body;
    std::string source;  // original text, for diagnostics
};

/// Parses the line-oriented rule format:
///   Head(x, y) :- Body1(x, z), Body2(z, y).
/// Relation names start uppercase; variables start lowercase; constants are
/// quoted strings or bare integers. '#' starts a comment. Rejects rules with
/// an empty body or a head variable that does not appear in the body.
/// Constants stay textual until evaluation, so parsed rules can run against
/// any fact base.
std::vector<Rule> parse_rules(std::string_view text);

struct FixpointStats {
    size_t rounds = 0;
    size_t derived = 0;
};

/// Identifies a fact as (relation, tuple).
using FactRef = std::pair<std::string, Tuple>;

/// One justification per derived tuple: the rule and the body facts of its
/// first derivation. Semi-naive rounds derive breadth-first, so the recorded
/// derivation has minimal depth.
struct Provenance {
    std::map<FactRef, std::pair<size_t, std::vector<FactRef>>> derivations;
};

/// Least model of base under rules, by semi-naive iteration (only delta
/// tuples re-join each round). Arity mismatches between rule atoms and
/// declared relations are rejected before evaluation.
FactBase run_to_fixpoint(FactBase base, const std::vector<Rule>& rules,
                         FixpointStats* stats = nullptr, Provenance* provenance = nullptr);

}  // namespace evmtaint::datalog
