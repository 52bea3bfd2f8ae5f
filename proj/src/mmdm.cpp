#include "mmdiag/mmdm.hpp"

#include <algorithm>
#include <atomic>

#include <json.hpp>

namespace mmdiag::mmdm {

using bdd::Fn;
using bdd::Manager;
using structure::LabeledGraph;

std::optional<std::vector<SignatureClass>> signature_classes(const LabeledGraph& g,
                                                             std::size_t cap) {
    Manager& mgr = *g.mgr;
    std::vector<Fn> classes;
    if (mgr.as_const(g.invariant) != std::optional<bool>{false}) classes.push_back(g.invariant);

    // Refine by every enabling condition, in deterministic order: equations,
    // variables, then edges. Unsatisfiable halves are dropped.
    auto split_by = [&](Fn cond) -> bool {
        std::vector<Fn> next;
        next.reserve(classes.size());
        for (Fn c : classes) {
            Fn on = c & cond;
            Fn off = c & !cond;
            if (mgr.as_const(on) != std::optional<bool>{false}) next.push_back(on);
            if (mgr.as_const(off) != std::optional<bool>{false}) next.push_back(off);
        }
        classes = std::move(next);
        return classes.size() <= cap;
    };
    for (Fn c : g.eq_gamma)
        if (!split_by(c)) return std::nullopt;
    for (Fn c : g.var_gamma)
        if (!split_by(c)) return std::nullopt;
    for (const auto& a : g.edges)
        if (!split_by(a.gamma)) return std::nullopt;

    std::vector<SignatureClass> out;
    out.reserve(classes.size());
    for (Fn c : classes) {
        SignatureClass sc;
        sc.modes = c;
        std::vector<std::size_t> eq_local(g.eq_names.size(), SIZE_MAX);
        std::vector<std::size_t> var_local(g.var_names.size(), SIZE_MAX);
        for (std::size_t e = 0; e < g.eq_names.size(); ++e) {
            if (!mgr.implies(c, g.eq_gamma[e])) continue;
            eq_local[e] = sc.eq_ids.size();
            sc.eq_ids.push_back(e);
        }
        for (std::size_t x = 0; x < g.var_names.size(); ++x) {
            if (!mgr.implies(c, g.var_gamma[x])) continue;
            var_local[x] = sc.var_ids.size();
            sc.var_ids.push_back(x);
        }
        sc.graph.resize(sc.eq_ids.size(), sc.var_ids.size());
        for (std::size_t e : sc.eq_ids) sc.graph.eq_names.push_back(g.eq_names[e]);
        for (std::size_t x : sc.var_ids) sc.graph.var_names.push_back(g.var_names[x]);
        for (std::size_t a = 0; a < g.edges.size(); ++a) {
            if (!mgr.implies(c, g.edges[a].gamma)) continue;
            sc.graph.add_edge(eq_local[g.edges[a].eq], var_local[g.edges[a].var]);
            sc.edge_ids.push_back(a);
        }
        out.push_back(std::move(sc));
    }
    return out;
}

namespace {

MultiModeMatching match_by_classes(const LabeledGraph& g,
                                   const std::vector<SignatureClass>& classes) {
    Manager& mgr = *g.mgr;
    MultiModeMatching t;
    t.edge_on.assign(g.edges.size(), mgr.bottom());
    std::vector<std::size_t> eq_local(g.eq_names.size()), var_local(g.var_names.size());
    for (const SignatureClass& sc : classes) {
        dm::Matching m = dm::max_matching(sc.graph);
        for (std::size_t i = 0; i < sc.eq_ids.size(); ++i) eq_local[sc.eq_ids[i]] = i;
        for (std::size_t i = 0; i < sc.var_ids.size(); ++i) var_local[sc.var_ids[i]] = i;
        for (std::size_t a : sc.edge_ids) {
            std::size_t e = eq_local[g.edges[a].eq];
            std::size_t x = var_local[g.edges[a].var];
            if (m.eq_to_var[e] == static_cast<int>(x))
                t.edge_on[a] = t.edge_on[a] | sc.modes;
        }
    }
    return t;
}

// Per-mode augmenting-path search run symbolically over all modes at once.
// Equations are processed in a fixed order; for each one, a depth-first
// search rearranges the current matching along alternating paths in exactly
// the mode subsets where that helps. Projected onto any single mode this is
// the classic sequential augmenting algorithm, so the result is a maximum
// matching in every valid mode.
class SymbolicMatcher {
public:
    explicit SymbolicMatcher(const LabeledGraph& g) : g_(g), mgr_(*g.mgr) {
        t_.edge_on.assign(g.edges.size(), mgr_.bottom());
        eq_matched_.assign(g.eq_names.size(), mgr_.bottom());
        var_matched_.assign(g.var_names.size(), mgr_.bottom());
    }

    MultiModeMatching run() {
        for (std::size_t e = 0; e < g_.eq_names.size(); ++e) {
            Fn todo = g_.eq_gamma[e] & !eq_matched_[e];
            if (mgr_.as_const(todo) == std::optional<bool>{false}) continue;
            visited_.assign(g_.var_names.size(), mgr_.bottom());
            try_match(e, todo);
        }
        return std::move(t_);
    }

private:
    // Attempts to match equation e in the modes of phi; returns the modes in
    // which it succeeded. The matching is updated in place.
    Fn try_match(std::size_t e, Fn phi) {
        Fn success = mgr_.bottom();
        for (std::size_t a : g_.eq_edges[e]) {
            std::size_t x = g_.edges[a].var;
            Fn psi = phi & g_.edges[a].gamma & !visited_[x] & !success;
            if (mgr_.as_const(psi) == std::optional<bool>{false}) continue;
            visited_[x] = visited_[x] | psi;

            Fn free = psi & !var_matched_[x];
            if (mgr_.as_const(free) != std::optional<bool>{false}) {
                t_.edge_on[a] = t_.edge_on[a] | free;
                eq_matched_[e] = eq_matched_[e] | free;
                var_matched_[x] = var_matched_[x] | free;
                success = success | free;
            }

            // Where x is taken, try to reroute its current partner.
            for (std::size_t b : g_.var_edges[x]) {
                if (b == a) continue;
                Fn psi2 = psi & t_.edge_on[b] & !success;
                if (mgr_.as_const(psi2) == std::optional<bool>{false}) continue;
                std::size_t e2 = g_.edges[b].eq;
                Fn got = try_match(e2, psi2);
                if (mgr_.as_const(got) == std::optional<bool>{false}) continue;
                t_.edge_on[b] = t_.edge_on[b] & !got;
                t_.edge_on[a] = t_.edge_on[a] | got;
                eq_matched_[e] = eq_matched_[e] | got;
                success = success | got;
            }
        }
        return success;
    }

    const LabeledGraph& g_;
    Manager& mgr_;
    MultiModeMatching t_;
    std::vector<Fn> eq_matched_, var_matched_, visited_;
};

}  // namespace

MultiModeMatching mm_matching(const LabeledGraph& g, MatchStrategy strategy,
                              std::size_t class_cap) {
    switch (strategy) {
        case MatchStrategy::Classes: {
            auto classes = signature_classes(g, class_cap);
            if (!classes)
                throw mel::ModelError("signature class cap exceeded; use the symbolic strategy");
            return match_by_classes(g, *classes);
        }
        case MatchStrategy::Symbolic:
            return SymbolicMatcher(g).run();
        case MatchStrategy::Auto: {
            if (auto classes = signature_classes(g, class_cap))
                return match_by_classes(g, *classes);
            return SymbolicMatcher(g).run();
        }
    }
    throw std::logic_error("unreachable");
}

namespace {
std::atomic<std::size_t> decompose_calls{0};
}

std::size_t decompose_count() { return decompose_calls.load(); }

MultiModeDecomposition mm_decompose(const LabeledGraph& g, const MultiModeMatching& t) {
    decompose_calls.fetch_add(1);
    Manager& mgr = *g.mgr;
    MultiModeDecomposition d;

    // Seed: modes in which an equation is enabled but unmatched.
    d.eq_over.reserve(g.eq_names.size());
    for (std::size_t e = 0; e < g.eq_names.size(); ++e) {
        Fn any_matched = mgr.bottom();
        for (std::size_t a : g.eq_edges[e]) any_matched = any_matched | t.edge_on[a];
        d.eq_over.push_back(g.eq_gamma[e] & !any_matched);
    }
    d.var_over.assign(g.var_names.size(), mgr.bottom());

    // Alternating-path propagation: variables via non-matching edges,
    // equations via matching edges, until a fixpoint is reached.
    bool changed = true;
    while (changed) {
        changed = false;
        ++d.sweeps;
        for (std::size_t x = 0; x < g.var_names.size(); ++x) {
            Fn acc = mgr.bottom();
            for (std::size_t a : g.var_edges[x]) {
                const auto& edge = g.edges[a];
                acc = acc | (!t.edge_on[a] & edge.gamma & d.eq_over[edge.eq]);
            }
            Fn next = d.var_over[x] | (g.var_gamma[x] & acc);
            if (!mgr.equiv(next, d.var_over[x])) {
                d.var_over[x] = next;
                changed = true;
            }
        }
        for (std::size_t e = 0; e < g.eq_names.size(); ++e) {
            Fn acc = mgr.bottom();
            for (std::size_t a : g.eq_edges[e])
                acc = acc | (t.edge_on[a] & d.var_over[g.edges[a].var]);
            Fn next = d.eq_over[e] | (g.eq_gamma[e] & acc);
            if (!mgr.equiv(next, d.eq_over[e])) {
                d.eq_over[e] = next;
                changed = true;
            }
        }
    }
    return d;
}

std::string decomposition_json(const LabeledGraph& g, const MultiModeDecomposition& d) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t e = 0; e < g.eq_names.size(); ++e)
        j[g.eq_names[e]] = g.mgr->serialize(d.eq_over[e]);
    return j.dump(2);
}

}  // namespace mmdiag::mmdm
