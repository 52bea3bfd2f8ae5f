#include "mmdiag/oracle.hpp"

#include <random>
#include <sstream>

#include <json.hpp>

namespace mmdiag::oracle {

using bdd::Assignment;
using bdd::Fn;
using bdd::Manager;
using structure::LabeledGraph;
using structure::StructuralModel;

std::vector<Assignment> enumerate_valid_modes(const StructuralModel& m, std::size_t cap) {
    if (m.system_modes.size() > cap)
        throw bdd::UsageError(
            "mode enumeration over " + std::to_string(m.system_modes.size()) +
            " mode variables exceeds the cap of " + std::to_string(cap) +
            "; raise the cap or use the symbolic analysis only");
    return m.mgr->models(m.graph.invariant, m.system_modes);
}

dm::Bipartite specialize(const LabeledGraph& g, const Assignment& a) {
    Manager& mgr = *g.mgr;
    dm::Bipartite b;
    std::vector<std::size_t> eq_local(g.eq_names.size(), SIZE_MAX);
    std::vector<std::size_t> var_local(g.var_names.size(), SIZE_MAX);
    for (std::size_t e = 0; e < g.eq_names.size(); ++e) {
        if (!mgr.eval(g.eq_gamma[e], a)) continue;
        eq_local[e] = b.eq_names.size();
        b.eq_names.push_back(g.eq_names[e]);
    }
    for (std::size_t x = 0; x < g.var_names.size(); ++x) {
        if (!mgr.eval(g.var_gamma[x], a)) continue;
        var_local[x] = b.var_names.size();
        b.var_names.push_back(g.var_names[x]);
    }
    b.resize(b.eq_names.size(), b.var_names.size());
    for (const auto& edge : g.edges) {
        if (!mgr.eval(edge.gamma, a)) continue;
        b.add_edge(eq_local[edge.eq], var_local[edge.var]);
    }
    return b;
}

bool overdetermined(const LabeledGraph& g, const Assignment& a, std::string_view eq) {
    dm::Bipartite b = specialize(g, a);
    std::size_t idx = SIZE_MAX;
    for (std::size_t e = 0; e < b.eq_names.size(); ++e)
        if (b.eq_names[e] == eq) idx = e;
    if (idx == SIZE_MAX) return false;
    return dm::dm_decompose(b).eq_part[idx] == dm::Part::Over;
}

namespace {

nlohmann::json mode_json(const Manager& mgr, const Assignment& a) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [v, val] : a) j[mgr.name(v)] = val;
    return j;
}

void record(MismatchReport& r, const Manager& mgr, const std::string& row,
            const std::string& col, const Assignment& mode, bool expected, bool got) {
    r.ok = false;
    nlohmann::json j;
    j["row"] = row;
    j["col"] = col;
    j["mode"] = mode_json(mgr, mode);
    j["expected"] = expected;
    j["got"] = got;
    r.lines.push_back(j.dump());
}

}  // namespace

MismatchReport compare(const StructuralModel& m, const diag::Matrix& d, std::size_t mode_cap) {
    Manager& mgr = *m.mgr;
    MismatchReport r;
    const std::size_t n = m.faults.size();

    // Per-column graphs and fault-variable substitutions. In the fault signal
    // approach column j removes the fault equation e_{f_j}; in the Boolean
    // approach it sets F_j and clears every other fault variable.
    std::vector<LabeledGraph> sig_graphs;
    if (m.approach == structure::Approach::Signal)
        for (const auto& f : m.faults) sig_graphs.push_back(m.graph.without_equation(f.equation));

    for (const Assignment& mode : enumerate_valid_modes(m, mode_cap)) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= n; ++j) {
                bool expected;
                if (m.approach == structure::Approach::Signal) {
                    const LabeledGraph& g = j == 0 ? m.graph : sig_graphs[j - 1];
                    expected = overdetermined(g, mode, m.faults[i].equation);
                } else {
                    Assignment ext = mode;
                    for (auto v : m.fault_modes) ext[v] = false;
                    if (j > 0) ext[*m.faults[j - 1].var] = true;
                    expected = overdetermined(m.graph, ext, m.faults[i].equation);
                }
                bool got = mgr.eval(d.entries[i][j], mode);
                if (got != expected)
                    record(r, mgr, m.faults[i].name, j == 0 ? "NF" : m.faults[j - 1].name, mode,
                           expected, got);
            }
        }
    }
    return r;
}

namespace {

Fn random_cond(Manager& mgr, const std::vector<bdd::VarId>& modes, std::mt19937_64& rng,
               int depth) {
    std::uniform_int_distribution<int> pick(0, 9);
    int k = pick(rng);
    if (modes.empty() || depth == 0 || k < 3) {
        if (modes.empty() || k == 0) return rng() & 1 ? mgr.top() : mgr.bottom();
        Fn v = mgr.var(modes[rng() % modes.size()]);
        return rng() & 1 ? v : !v;
    }
    Fn a = random_cond(mgr, modes, rng, depth - 1);
    Fn b = random_cond(mgr, modes, rng, depth - 1);
    switch (k % 3) {
        case 0: return a & b;
        case 1: return a | b;
        default: return !a;
    }
}

}  // namespace

StructuralModel random_model(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto rnd = [&](std::size_t lo, std::size_t hi) {
        return lo + rng() % (hi - lo + 1);
    };

    StructuralModel m;
    m.mgr = std::make_unique<Manager>();
    Manager& mgr = *m.mgr;
    m.approach = structure::Approach::Signal;

    std::size_t n_modes = rnd(0, 3);
    for (std::size_t k = 0; k < n_modes; ++k)
        m.system_modes.push_back(mgr.declare("m" + std::to_string(k)));

    LabeledGraph& g = m.graph;
    g.mgr = &mgr;
    g.invariant = random_cond(mgr, m.system_modes, rng, 1);
    if (mgr.as_const(g.invariant) == std::optional<bool>{false}) g.invariant = mgr.top();

    std::size_t n_eq = rnd(2, 6);
    std::size_t n_var = rnd(1, n_eq);
    for (std::size_t x = 0; x < n_var; ++x) {
        g.var_names.push_back("x" + std::to_string(x));
        g.var_gamma.push_back(mgr.bottom());
    }
    for (std::size_t e = 0; e < n_eq; ++e) {
        g.eq_names.push_back("e" + std::to_string(e));
        Fn ge = random_cond(mgr, m.system_modes, rng, 2) & g.invariant;
        g.eq_gamma.push_back(ge);
        for (std::size_t x = 0; x < n_var; ++x) {
            if (rng() % 2) continue;
            Fn ga = random_cond(mgr, m.system_modes, rng, 1) & ge;
            if (mgr.as_const(ga) == std::optional<bool>{false}) continue;
            g.edges.push_back({e, x, ga});
            g.var_gamma[x] = g.var_gamma[x] | ga;
        }
        if (rng() % 2)
            m.faults.push_back({"f" + std::to_string(e), g.eq_names.back(), std::nullopt});
    }
    g.rebuild_adjacency();
    return m;
}

}  // namespace mmdiag::oracle
