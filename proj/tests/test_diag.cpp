#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mmdiag/battery.hpp"
#include "mmdiag/diag.hpp"
#include "mmdiag/mel.hpp"
#include "mmdiag/oracle.hpp"
#include "mmdiag/structure.hpp"

using namespace mmdiag;
using bdd::Fn;
using structure::Approach;
using structure::StructuralModel;

namespace {

StructuralModel battery_model(std::size_t n, Approach a, battery::Flavor fl) {
    return structure::extract_structure(
        mel::flatten(mel::parse(battery::generate(n, a, fl)),
                     {{"N", static_cast<long long>(n)}}));
}

std::size_t fault_index(const StructuralModel& m, const std::string& name) {
    for (std::size_t i = 0; i < m.faults.size(); ++i)
        if (m.faults[i].name == name) return i;
    REQUIRE(false);
    return 0;
}

}  // namespace

TEST_CASE("one-SM signal matrix has the reference pattern") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto& mgr = *m.mgr;
    Fn bypass = !mgr.var(*mgr.find("forward")) & !mgr.var(*mgr.find("backward"));
    auto d = diag::diagnosability_signal(m);

    std::size_t c = fault_index(m, "f_cell");
    std::size_t i = fault_index(m, "f_i_cell");
    std::size_t v = fault_index(m, "f_v_cell");
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(d.at(r, 0) == mgr.top());      // NF column
        CHECK(d.at(r, r + 1) == mgr.bottom());  // diagonal
    }
    CHECK(d.at(c, v + 1) == mgr.bottom());
    CHECK(d.at(v, c + 1) == mgr.bottom());
    for (auto [r, col] : {std::pair{c, i}, {i, c}, {i, v}, {v, i}})
        CHECK(mgr.equiv(d.at(r, col + 1), bypass));
}

TEST_CASE("Boolean detectability and isolability of one SM") {
    auto m = battery_model(1, Approach::Boolean, battery::Flavor::SingleSM);
    auto& mgr = *m.mgr;
    Fn fwd = mgr.var(*mgr.find("forward"));
    Fn bwd = mgr.var(*mgr.find("backward"));
    auto analysis = diag::analyze_boolean(m);

    CHECK(mgr.equiv(analysis.detectability("F_i_cell"), !bwd | !fwd));
    CHECK(mgr.equiv(analysis.isolability("F_cell", {"F_i_cell"}), !fwd & !bwd));
    CHECK(analysis.isolability("F_cell", {"F_i_cell", "F_v_cell"}) == mgr.bottom());
    CHECK(analysis.isolability("F_cell", {}) == analysis.detectability("F_cell"));
    CHECK_THROWS_AS(analysis.isolability("F_cell", {"F_cell"}), bdd::UsageError);
}

TEST_CASE("approach agreement on the battery models") {
    for (std::size_t n : {1u, 2u}) {
        auto ms = battery_model(n, Approach::Signal, battery::Flavor::Pack);
        auto mb = battery_model(n, Approach::Boolean, battery::Flavor::Pack);
        auto ds = diag::diagnosability_signal(ms);
        auto db = diag::diagnosability_boolean(mb);
        REQUIRE(ds.faults.size() == db.faults.size());
        for (std::size_t i = 0; i < ds.faults.size(); ++i) {
            // Same declaration order in both flavors; rows/columns align.
            CHECK(ms.faults[i].equation == mb.faults[i].equation);
            for (std::size_t j = 0; j <= ds.faults.size(); ++j)
                CHECK(ms.mgr->equiv(ds.at(i, j), ms.mgr->import(db.at(i, j))));
        }
    }
}

TEST_CASE("undetectable faults copy the NF column") {
    auto m = battery_model(0, Approach::Signal, battery::Flavor::Pack);
    auto d = diag::diagnosability_signal(m);
    std::size_t ip = fault_index(m, "f_i_pack");
    CHECK(d.at(ip, 0) == m.mgr->bottom());
    for (std::size_t i = 0; i < d.faults.size(); ++i)
        CHECK(d.at(i, ip + 1) == d.at(i, 0));
}

TEST_CASE("decomposition call economy") {
    auto mb = battery_model(2, Approach::Boolean, battery::Flavor::Pack);
    std::size_t before = mmdm::decompose_count();
    auto db = diag::diagnosability_boolean(mb);
    CHECK(mmdm::decompose_count() - before == 1);  // one run serves the matrix
    (void)db;

    auto ms = battery_model(2, Approach::Signal, battery::Flavor::Pack);
    std::size_t detectable = 0;
    {
        auto det = diag::detectability_signal(ms);
        for (const auto& [name, fn] : det)
            detectable += ms.mgr->as_const(fn) != std::optional<bool>{false};
    }
    before = mmdm::decompose_count();
    auto ds = diag::diagnosability_signal(ms);
    (void)ds;
    CHECK(mmdm::decompose_count() - before <= 1 + detectable);
}

TEST_CASE("parallel column computation matches sequential") {
    auto m = battery_model(2, Approach::Signal, battery::Flavor::Pack);
    auto seq = diag::diagnosability_signal(m, 1);
    auto par = diag::diagnosability_signal(m, 4);
    for (std::size_t i = 0; i < seq.faults.size(); ++i)
        for (std::size_t j = 0; j <= seq.faults.size(); ++j)
            CHECK(seq.at(i, j) == par.at(i, j));
}

TEST_CASE("entry rendering: constants, macros, fallback") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto& mgr = *m.mgr;
    auto d = diag::diagnosability_signal(m);
    auto macros = diag::default_macros(m);
    REQUIRE(macros.macros.size() == 1);
    CHECK(macros.macros[0].first == "bypass");

    Fn fwd = mgr.var(*mgr.find("forward"));
    Fn bwd = mgr.var(*mgr.find("backward"));
    CHECK(diag::render_entry(d, mgr.top(), macros) == "T");
    CHECK(diag::render_entry(d, mgr.bottom(), macros) == "F");
    CHECK(diag::render_entry(d, !fwd & !bwd & d.invariant, macros) == "bypass");
    CHECK(diag::render_entry(d, (fwd | bwd) & d.invariant, macros) == "!bypass");
    // No macro matches: falls back to a sum-of-products form.
    std::string sop = diag::render_entry(d, fwd & !bwd, macros);
    CHECK(sop.find("forward") != std::string::npos);
}

TEST_CASE("table and CSV renderers") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    auto d = diag::diagnosability_signal(m);
    auto macros = diag::default_macros(m);
    std::string table = diag::render_table(d, macros);
    CHECK(table.find("NF") != std::string::npos);
    CHECK(table.find("bypass") != std::string::npos);
    std::string csv = diag::render_csv(d, macros);
    CHECK(csv.starts_with("fault,NF,f_cell,f_i_cell,f_v_cell\n"));
}

TEST_CASE("JSON round-trip preserves every entry") {
    for (auto approach : {Approach::Signal, Approach::Boolean}) {
        auto m = battery_model(2, approach, battery::Flavor::Pack);
        auto d = approach == Approach::Signal ? diag::diagnosability_signal(m)
                                              : diag::diagnosability_boolean(m);
        auto back = diag::parse_matrix_json(diag::render_json(d), m);
        REQUIRE(back.faults == d.faults);
        for (std::size_t i = 0; i < d.faults.size(); ++i)
            for (std::size_t j = 0; j <= d.faults.size(); ++j)
                CHECK(back.at(i, j) == d.at(i, j));
    }
}

TEST_CASE("macro files load and take precedence in rendering") {
    auto m = battery_model(1, Approach::Signal, battery::Flavor::SingleSM);
    std::string path = "macros_test.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "idle = !forward & !backward\n";
    }
    auto t = diag::load_macros(path, m);
    std::remove(path.c_str());
    REQUIRE(t.macros.size() == 1);
    CHECK(t.macros[0].first == "idle");
    Fn bypass = !m.mgr->var(*m.mgr->find("forward")) & !m.mgr->var(*m.mgr->find("backward"));
    CHECK(m.mgr->equiv(t.macros[0].second, bypass));
}

TEST_CASE("pack macros cover each submodule and the whole pack") {
    auto m = battery_model(2, Approach::Signal, battery::Flavor::Pack);
    auto macros = diag::default_macros(m);
    std::vector<std::string> names;
    for (const auto& [n, f] : macros.macros) names.push_back(n);
    CHECK(names == std::vector<std::string>{"bypass_1", "bypass_2", "bypass_all"});
}
