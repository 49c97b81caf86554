// evmtaint: static taint analysis for EVM bytecode
// Copyright 2026 The evmtaint Authors.
// Licensed under the Apache License, Version 2.0.
#include "evmtaint/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <iterator>
#include <sstream>

#include "evmtaint/hex.hpp"

namespace evmtaint::datalog {

Symbol SymbolTable::intern(std::string_view name) {
    if (const auto it = ids_.find(name); it != ids_.end()) return it->second;
    const Symbol id = static_cast<Symbol>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

std::optional<Symbol> SymbolTable::find(std::string_view name) const {
    const auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

void FactBase::declare(const std::string& relation, size_t arity) {
    const auto [it, inserted] = relations_.try_emplace(relation, Relation{arity, {}});
    if (!inserted && it->second.arity != arity)
        throw Error("relation " + relation + " redeclared with arity " + std::to_string(arity) +
                    " (was " + std::to_string(it->second.arity) + ")");
}

bool FactBase::is_declared(const std::string& relation) const {
    return relations_.count(relation) != 0;
}

size_t FactBase::arity(const std::string& relation) const {
    const auto it = relations_.find(relation);
    if (it == relations_.end()) throw Error("unknown relation: " + relation);
    return it->second.arity;
}

bool FactBase::insert(const std::string& relation, Tuple tuple) {
    const auto it = relations_.find(relation);
    if (it == relations_.end()) throw Error("unknown relation: " + relation);
    if (tuple.size() != it->second.arity)
        throw Error("arity mismatch inserting into " + relation + ": got " +
                    std::to_string(tuple.size()) + ", declared " +
                    std::to_string(it->second.arity));
    return it->second.tuples.insert(std::move(tuple)).second;
}

bool FactBase::insert_names(const std::string& relation, const std::vector<std::string>& symbols) {
    Tuple t;
    t.reserve(symbols.size());
    for (const auto& s : symbols) t.push_back(symbols_.intern(s));
    return insert(relation, std::move(t));
}

bool FactBase::contains(const std::string& relation, const Tuple& tuple) const {
    const auto it = relations_.find(relation);
    return it != relations_.end() && it->second.tuples.count(tuple) != 0;
}

const std::set<Tuple>& FactBase::tuples(const std::string& relation) const {
    const auto it = relations_.find(relation);
    if (it == relations_.end()) throw Error("unknown relation: " + relation);
    return it->second.tuples;
}

std::vector<std::string> FactBase::names_of(const Tuple& t) const {
    std::vector<std::string> out;
    out.reserve(t.size());
    for (const Symbol s : t) out.push_back(symbols_.name(s));
    return out;
}

std::vector<Tuple> FactBase::query(const std::string& relation,
                                   const std::vector<std::optional<std::string>>& pattern) const {
    const auto it = relations_.find(relation);
    if (it == relations_.end()) throw Error("unknown relation: " + relation);
    if (pattern.size() != it->second.arity)
        throw Error("pattern arity mismatch for " + relation);

    std::vector<std::optional<Symbol>> want(pattern.size());
    for (size_t i = 0; i < pattern.size(); ++i) {
        if (!pattern[i]) continue;
        // A constant never interned cannot match anything.
        const auto s = symbols_.find(*pattern[i]);
        if (!s) return {};
        want[i] = *s;
    }

    std::vector<Tuple> out;
    for (const auto& t : it->second.tuples) {
        bool ok = true;
        for (size_t i = 0; i < t.size() && ok; ++i)
            if (want[i] && *want[i] != t[i]) ok = false;
        if (ok) out.push_back(t);
    }
    std::sort(out.begin(), out.end(), [this](const Tuple& a, const Tuple& b) {
        return names_of(a) < names_of(b);
    });
    return out;
}

std::vector<std::string> FactBase::relation_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : relations_) out.push_back(name);
    return out;
}

size_t FactBase::total_facts() const {
    size_t n = 0;
    for (const auto& [_, rel] : relations_) n += rel.tuples.size();
    return n;
}

std::string FactBase::dump_tsv(const std::string& relation) const {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : tuples(relation)) rows.push_back(names_of(t));
    std::sort(rows.begin(), rows.end());
    std::ostringstream os;
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "\t" : "") << row[i];
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Rule parsing

namespace {

struct Parser {
    std::string_view text;
    size_t pos = 0;
    size_t line = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error("rule parse error at line " + std::to_string(line) + ": " + msg);
    }

    void skip_space_in_line() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool at_end() const { return pos >= text.size(); }

    char peek() const { return text[pos]; }

    std::string_view take_identifier() {
        const size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected identifier");
        return text.substr(start, pos - start);
    }

    Term parse_term(std::map<std::string, int, std::less<>>& vars) {
        skip_space_in_line();
        if (at_end()) fail("unexpected end of rule");
        Term t;
        const char c = peek();
        if (c == '"') {
            ++pos;
            const size_t start = pos;
            while (pos < text.size() && text[pos] != '"' && text[pos] != '\n') ++pos;
            if (at_end() || text[pos] != '"') fail("unterminated string constant");
            t.text = std::string(text.substr(start, pos - start));
            ++pos;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            const size_t start = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            t.text = std::string(text.substr(start, pos - start));
        } else if (std::islower(static_cast<unsigned char>(c)) || c == '_') {
            const auto id = take_identifier();
            t.is_variable = true;
            t.text = std::string(id);
            const auto [it, inserted] =
                vars.try_emplace(t.text, static_cast<int>(vars.size()));
            t.variable = it->second;
        } else {
            fail(std::string("unexpected character '") + c + "' in term");
        }
        return t;
    }

    Atom parse_atom(std::map<std::string, int, std::less<>>& vars) {
        skip_space_in_line();
        if (at_end() || !std::isupper(static_cast<unsigned char>(peek())))
            fail("expected relation name (must start uppercase)");
        Atom atom;
        atom.relation = std::string(take_identifier());
        skip_space_in_line();
        if (at_end() || peek() != '(') fail("expected '(' after relation name");
        ++pos;
        while (true) {
            atom.terms.push_back(parse_term(vars));
            skip_space_in_line();
            if (at_end()) fail("unterminated atom");
            if (peek() == ',') {
                ++pos;
                continue;
            }
            if (peek() == ')') {
                ++pos;
                break;
            }
            fail("expected ',' or ')' in atom");
        }
        return atom;
    }
};

}  // namespace

std::vector<Rule> parse_rules(std::string_view text) {
    std::vector<Rule> rules;
    size_t line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t nl = text.find('\n', start);
        const std::string_view line =
            text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++line_no;
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        std::string_view body = line.substr(0, line.find('#'));
        while (!body.empty() && (body.back() == ' ' || body.back() == '\t' || body.back() == '\r'))
            body.remove_suffix(1);
        size_t lead = 0;
        while (lead < body.size() && (body[lead] == ' ' || body[lead] == '\t')) ++lead;
        body.remove_prefix(lead);
        if (body.empty()) continue;

        Parser p{body, 0, line_no};
        std::map<std::string, int, std::less<>> vars;
        Rule rule;
        rule.source = std::string(body);
        rule.head = p.parse_atom(vars);
        p.skip_space_in_line();
        if (p.at_end() || p.text.substr(p.pos, 2) != ":-")
            p.fail("expected ':-' after head (facts belong in the fact base, not rules)");
        p.pos += 2;
        while (true) {
            rule.body.push_back(p.parse_atom(vars));
            p.skip_space_in_line();
            if (!p.at_end() && p.peek() == ',') {
                ++p.pos;
                continue;
            }
            break;
        }
        p.skip_space_in_line();
        if (p.at_end() || p.peek() != '.') p.fail("expected '.' at end of rule");
        ++p.pos;
        p.skip_space_in_line();
        if (!p.at_end()) p.fail("trailing characters after '.'");

        // Range restriction: every head variable appears in some body atom.
        for (const auto& term : rule.head.terms) {
            if (!term.is_variable) continue;
            bool bound = false;
            for (const auto& atom : rule.body)
                for (const auto& bt : atom.terms)
                    if (bt.is_variable && bt.variable == term.variable) bound = true;
            if (!bound)
                p.fail("head variable '" + term.text + "' does not appear in the body");
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

// ---------------------------------------------------------------------------
// Semi-naive evaluation

namespace {

struct EvalRelation {
    std::set<Tuple> full;   // everything known at the start of the round
    std::set<Tuple> delta;  // discovered in the previous round
    std::set<Tuple> old;    // full minus delta, refreshed each round
};

// An atom with its constant terms resolved to symbol ids (-1 in variable
// positions).
struct BoundAtom {
    const Atom* atom = nullptr;
    std::vector<Symbol> consts;
};

// Binds `ba` against `tuple`; returns false on mismatch. `env` maps
// variable id -> symbol; -1 means unbound.
bool unify(const BoundAtom& ba, const Tuple& tuple, std::vector<Symbol>& env,
           std::vector<int>& bound_here) {
    for (size_t i = 0; i < ba.atom->terms.size(); ++i) {
        const Term& t = ba.atom->terms[i];
        if (!t.is_variable) {
            if (ba.consts[i] != tuple[i]) return false;
        } else if (env[static_cast<size_t>(t.variable)] < 0) {
            env[static_cast<size_t>(t.variable)] = tuple[i];
            bound_here.push_back(t.variable);
        } else if (env[static_cast<size_t>(t.variable)] != tuple[i]) {
            return false;
        }
    }
    return true;
}

void unbind(std::vector<Symbol>& env, const std::vector<int>& bound_here) {
    for (const int v : bound_here) env[static_cast<size_t>(v)] = -1;
}

size_t count_vars(const Rule& rule) {
    int max_var = -1;
    auto scan = [&](const Atom& a) {
        for (const auto& t : a.terms)
            if (t.is_variable) max_var = std::max(max_var, t.variable);
    };
    scan(rule.head);
    for (const auto& a : rule.body) scan(a);
    return static_cast<size_t>(max_var + 1);
}

}  // namespace

FactBase run_to_fixpoint(FactBase base, const std::vector<Rule>& rules, FixpointStats* stats,
                         Provenance* provenance) {
    // Collect relation arities: declared in the base plus inferred from rules.
    std::map<std::string, size_t> arities;
    for (const auto& [name, rel] : base.relations_) arities[name] = rel.arity;
    auto check_atom = [&](const Atom& atom, const Rule& rule) {
        const auto [it, inserted] = arities.try_emplace(atom.relation, atom.terms.size());
        if (!inserted && it->second != atom.terms.size())
            throw Error("arity mismatch: " + atom.relation + "/" +
                        std::to_string(atom.terms.size()) + " in rule '" + rule.source +
                        "' vs declared arity " + std::to_string(it->second));
    };
    for (const auto& rule : rules) {
        check_atom(rule.head, rule);
        for (const auto& atom : rule.body) check_atom(atom, rule);
    }
    for (const auto& [name, arity] : arities) base.declare(name, arity);

    // Resolve rule constants against this base's symbol table.
    auto bind_atom = [&](const Atom& atom) {
        BoundAtom ba{&atom, std::vector<Symbol>(atom.terms.size(), -1)};
        for (size_t i = 0; i < atom.terms.size(); ++i)
            if (!atom.terms[i].is_variable) ba.consts[i] = base.symbols_.intern(atom.terms[i].text);
        return ba;
    };
    std::vector<BoundAtom> heads;
    std::vector<std::vector<BoundAtom>> bodies;
    for (const auto& rule : rules) {
        heads.push_back(bind_atom(rule.head));
        std::vector<BoundAtom> body;
        for (const auto& atom : rule.body) body.push_back(bind_atom(atom));
        bodies.push_back(std::move(body));
    }

    std::map<std::string, EvalRelation> eval;
    for (const auto& [name, rel] : base.relations_) {
        eval[name].full = rel.tuples;
        eval[name].delta = rel.tuples;  // round 1 treats all input as new
    }

    FixpointStats local;
    size_t total_new = 0;
    while (true) {
        ++local.rounds;
        for (auto& [name, er] : eval) {
            er.old.clear();
            std::set_difference(er.full.begin(), er.full.end(), er.delta.begin(), er.delta.end(),
                                std::inserter(er.old, er.old.begin()));
        }

        // (relation, tuple, rule index, body facts)
        std::vector<std::tuple<std::string, Tuple, size_t, std::vector<FactRef>>> discovered;

        for (size_t ri = 0; ri < rules.size(); ++ri) {
            const Rule& rule = rules[ri];
            std::vector<Symbol> env(count_vars(rule), -1);
            std::vector<FactRef> trail(rule.body.size());

            // Each body position takes a turn reading from the delta; positions
            // before it read the pre-round set, positions after read everything.
            // Every new combination is enumerated exactly once.
            for (size_t delta_pos = 0; delta_pos < rule.body.size(); ++delta_pos) {
                std::function<void(size_t)> join = [&](size_t bi) {
                    if (bi == rule.body.size()) {
                        Tuple head(rule.head.terms.size());
                        for (size_t i = 0; i < head.size(); ++i) {
                            const Term& t = rule.head.terms[i];
                            head[i] = t.is_variable ? env[static_cast<size_t>(t.variable)]
                                                    : heads[ri].consts[i];
                        }
                        discovered.emplace_back(rule.head.relation, std::move(head), ri, trail);
                        return;
                    }
                    const BoundAtom& ba = bodies[ri][bi];
                    const EvalRelation& er = eval.at(ba.atom->relation);
                    const std::set<Tuple>& source =
                        bi == delta_pos ? er.delta : (bi < delta_pos ? er.old : er.full);
                    for (const auto& tuple : source) {
                        std::vector<int> bound_here;
                        if (unify(ba, tuple, env, bound_here)) {
                            trail[bi] = {ba.atom->relation, tuple};
                            join(bi + 1);
                        }
                        unbind(env, bound_here);
                    }
                };
                join(0);
            }
        }

        // Fold discoveries into the next delta.
        std::map<std::string, std::set<Tuple>> next_delta;
        for (auto& [rel, tuple, ri, body] : discovered) {
            if (eval.at(rel).full.count(tuple)) continue;
            const bool fresh = next_delta[rel].insert(tuple).second;
            if (fresh && provenance)
                provenance->derivations.emplace(FactRef{rel, tuple}, std::make_pair(ri, body));
        }

        size_t round_new = 0;
        for (auto& [name, er] : eval) {
            auto it = next_delta.find(name);
            er.delta = it == next_delta.end() ? std::set<Tuple>{} : std::move(it->second);
            round_new += er.delta.size();
            er.full.insert(er.delta.begin(), er.delta.end());
        }
        total_new += round_new;
        if (round_new == 0) break;
    }
    local.derived = total_new;

    for (auto& [name, er] : eval) base.relations_.at(name).tuples = std::move(er.full);
    if (stats) *stats = local;
    return base;
}

}  // namespace evmtaint::datalog
