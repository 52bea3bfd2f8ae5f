#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "mmdiag/battery.hpp"
#include "mmdiag/mel.hpp"
#include "mmdiag/mmdm.hpp"
#include "mmdiag/oracle.hpp"
#include "mmdiag/structure.hpp"

using namespace mmdiag;
using bdd::Fn;
using structure::Approach;
using structure::LabeledGraph;
using structure::StructuralModel;

namespace {

StructuralModel battery_model(std::size_t n, Approach a, battery::Flavor fl) {
    return structure::extract_structure(
        mel::flatten(mel::parse(battery::generate(n, a, fl)),
                     {{"N", static_cast<long long>(n)}}));
}

// Per-mode ground truth for the overdetermined membership of every equation.
void check_pointwise(const StructuralModel& m, const LabeledGraph& g,
                     const mmdm::MultiModeDecomposition& dec) {
    std::vector<bdd::VarId> all;
    for (auto v : m.system_modes) all.push_back(v);
    for (auto v : m.fault_modes) all.push_back(v);
    for (const auto& mode : m.mgr->models(g.invariant, all)) {
        dm::Bipartite b = oracle::specialize(g, mode);
        dm::Decomposition d = dm::dm_decompose(b);
        std::size_t local = 0;
        for (std::size_t e = 0; e < g.eq_names.size(); ++e) {
            bool enabled = m.mgr->eval(g.eq_gamma[e], mode);
            bool over = enabled && d.eq_part[local] == dm::Part::Over;
            if (enabled) ++local;
            CHECK(m.mgr->eval(dec.eq_over[e], mode) == over);
        }
    }
}

LabeledGraph shuffled(const LabeledGraph& g, std::mt19937_64& rng) {
    LabeledGraph h = g;
    std::shuffle(h.edges.begin(), h.edges.end(), rng);
    h.rebuild_adjacency();
    return h;
}

}  // namespace

TEST_CASE("one SM has exactly two signature classes") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto classes = mmdm::signature_classes(m.graph);
    REQUIRE(classes.has_value());
    CHECK(classes->size() == 2);  // {forward or backward} and {bypass}

    // Classes partition the invariant.
    Fn acc = m.mgr->bottom();
    for (const auto& sc : *classes) {
        CHECK((acc & sc.modes) == m.mgr->bottom());
        acc = acc | sc.modes;
    }
    CHECK(m.mgr->equiv(acc, m.graph.invariant));
}

TEST_CASE("a mode-free model has one TRUE class") {
    auto fm = mel::flatten(mel::parse("x : real; e1 : x = 0; e2 : x = 1;"));
    auto m = structure::extract_structure(fm);
    auto classes = mmdm::signature_classes(m.graph);
    REQUIRE(classes.has_value());
    REQUIRE(classes->size() == 1);
    CHECK((*classes)[0].modes == m.mgr->top());

    auto t = mmdm::mm_matching(m.graph);
    for (Fn f : t.edge_on) CHECK(m.mgr->as_const(f).has_value());
}

TEST_CASE("class cap exceeded yields nullopt") {
    auto m = battery_model(3, Approach::Signal, battery::Flavor::Pack);
    CHECK(!mmdm::signature_classes(m.graph, 2).has_value());
    CHECK_THROWS_AS(mmdm::mm_matching(m.graph, mmdm::MatchStrategy::Classes, 2),
                    mel::ModelError);
}

TEST_CASE("matchings are maximum in every valid mode") {
    for (auto strategy : {mmdm::MatchStrategy::Classes, mmdm::MatchStrategy::Symbolic}) {
        auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
        auto t = mmdm::mm_matching(m.graph, strategy);
        for (std::size_t a = 0; a < m.graph.edges.size(); ++a)
            CHECK(m.mgr->implies(t.edge_on[a], m.graph.edges[a].gamma));
        for (const auto& mode : oracle::enumerate_valid_modes(m)) {
            dm::Bipartite b = oracle::specialize(m.graph, mode);
            std::size_t maximum = dm::max_matching(b).size;
            // Selected edges form an injective equation-variable pairing.
            std::vector<bool> eq_used(m.graph.eq_names.size()), var_used(m.graph.var_names.size());
            std::size_t selected = 0;
            for (std::size_t a = 0; a < m.graph.edges.size(); ++a) {
                if (!m.mgr->eval(t.edge_on[a], mode)) continue;
                CHECK(!eq_used[m.graph.edges[a].eq]);
                CHECK(!var_used[m.graph.edges[a].var]);
                eq_used[m.graph.edges[a].eq] = true;
                var_used[m.graph.edges[a].var] = true;
                ++selected;
            }
            CHECK(selected == maximum);
        }
    }
}

TEST_CASE("one-SM overdetermined functions match the known formulas") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto& mgr = *m.mgr;
    Fn fwd = mgr.var(*mgr.find("forward"));
    Fn bwd = mgr.var(*mgr.find("backward"));

    auto dec = mmdm::mm_decompose(m.graph);
    auto e2 = m.graph.find_equation("e2");
    REQUIRE(e2.has_value());
    CHECK(mgr.equiv(dec.eq_over[*e2], !fwd | !bwd));  // detectable in all valid modes

    // With the current-sensor equation removed, the cell fault shows only in bypass.
    LabeledGraph g2 = m.graph.without_equation("e6");
    auto dec2 = mmdm::mm_decompose(g2);
    auto e2b = g2.find_equation("e2");
    REQUIRE(e2b.has_value());
    CHECK(mgr.equiv(dec2.eq_over[*e2b], !fwd & !bwd));
}

TEST_CASE("Boolean one-SM overdetermined part equals the three-clause form") {
    auto m = battery_model(1, Approach::Boolean, battery::Flavor::SingleSM);
    auto& mgr = *m.mgr;
    Fn fwd = mgr.var(*mgr.find("forward"));
    Fn bwd = mgr.var(*mgr.find("backward"));
    Fn Fc = mgr.var(*mgr.find("F_cell"));
    Fn Fi = mgr.var(*mgr.find("F_i_cell"));
    Fn Fv = mgr.var(*mgr.find("F_v_cell"));
    Fn formula = (!bwd & !Fc & !Fi & !Fv) | (!fwd & !Fc & !Fi & !Fv) |
                 (!fwd & !bwd & !Fc & !Fv);

    auto dec = mmdm::mm_decompose(m.graph);
    auto e2 = m.graph.find_equation("e2");
    REQUIRE(e2.has_value());
    CHECK(mgr.equiv(dec.eq_over[*e2], formula));
}

TEST_CASE("strategies agree and results are matching-independent") {
    std::mt19937_64 rng(101);
    auto m = battery_model(2, Approach::Signal, battery::Flavor::Pack);
    auto base = mmdm::mm_decompose(m.graph, mmdm::MatchStrategy::Classes);
    auto sym = mmdm::mm_decompose(m.graph, mmdm::MatchStrategy::Symbolic);
    for (std::size_t e = 0; e < m.graph.eq_names.size(); ++e)
        CHECK(m.mgr->equiv(base.eq_over[e], sym.eq_over[e]));

    for (int s = 0; s < 20; ++s) {
        LabeledGraph h = shuffled(m.graph, rng);
        auto dec = mmdm::mm_decompose(h);
        for (std::size_t e = 0; e < h.eq_names.size(); ++e) {
            auto orig = m.graph.find_equation(h.eq_names[e]);
            REQUIRE(orig.has_value());
            CHECK(m.mgr->equiv(dec.eq_over[e], base.eq_over[*orig]));
        }
    }
}

TEST_CASE("fixpoint bounds and label implications") {
    for (auto approach : {Approach::Signal, Approach::Boolean}) {
        auto m = battery_model(2, approach, battery::Flavor::Pack);
        auto dec = mmdm::mm_decompose(m.graph);
        CHECK(dec.sweeps <= m.graph.eq_names.size() + m.graph.var_names.size());
        for (std::size_t e = 0; e < m.graph.eq_names.size(); ++e)
            CHECK(m.mgr->implies(dec.eq_over[e], m.graph.eq_gamma[e]));
        for (std::size_t x = 0; x < m.graph.var_names.size(); ++x)
            CHECK(m.mgr->implies(dec.var_over[x], m.graph.var_gamma[x]));
    }
}

TEST_CASE("decomposition JSON dump covers every equation") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto dec = mmdm::mm_decompose(m.graph);
    std::string j = mmdm::decomposition_json(m.graph, dec);
    for (const auto& name : m.graph.eq_names)
        CHECK(j.find('"' + name + '"') != std::string::npos);
    CHECK(j.find("root") != std::string::npos);
}

TEST_CASE("pointwise correctness against the single-mode oracle") {
    auto sm1 = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    check_pointwise(sm1, sm1.graph, mmdm::mm_decompose(sm1.graph));

    auto sb1 = battery_model(1, Approach::Boolean, battery::Flavor::SingleSM);
    check_pointwise(sb1, sb1.graph, mmdm::mm_decompose(sb1.graph));

    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto rm = oracle::random_model(seed);
        for (auto strategy : {mmdm::MatchStrategy::Classes, mmdm::MatchStrategy::Symbolic})
            check_pointwise(rm, rm.graph, mmdm::mm_decompose(rm.graph, strategy));
    }
}
