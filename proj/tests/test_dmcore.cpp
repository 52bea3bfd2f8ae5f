#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "mmdiag/dm.hpp"

using namespace mmdiag::dm;

namespace {

Bipartite make(std::size_t ne, std::size_t nx, std::initializer_list<std::pair<int, int>> edges) {
    Bipartite g;
    g.resize(ne, nx);
    for (auto [e, x] : edges) g.add_edge(static_cast<std::size_t>(e), static_cast<std::size_t>(x));
    return g;
}

// Exhaustive maximum-matching size by trying every equation->variable map.
std::size_t brute_max_matching(const Bipartite& g) {
    std::size_t best = 0;
    std::vector<bool> used(g.n_var, false);
    auto rec = [&](auto&& self, std::size_t e, std::size_t size) -> void {
        best = std::max(best, size);
        if (e == g.n_eq) return;
        self(self, e + 1, size);  // leave e unmatched
        for (auto x : g.eq_adj[e]) {
            if (used[x]) continue;
            used[x] = true;
            self(self, e + 1, size + 1);
            used[x] = false;
        }
    };
    rec(rec, 0, 0);
    return best;
}

Bipartite random_graph(std::mt19937_64& rng, std::size_t max_side) {
    Bipartite g;
    std::size_t ne = 1 + rng() % max_side, nx = 1 + rng() % max_side;
    g.resize(ne, nx);
    for (std::size_t e = 0; e < ne; ++e)
        for (std::size_t x = 0; x < nx; ++x)
            if (rng() % 3 == 0) g.add_edge(e, x);
    return g;
}

Bipartite without_equation(const Bipartite& g, std::size_t drop) {
    Bipartite h;
    h.resize(g.n_eq - 1, g.n_var);
    std::size_t out = 0;
    for (std::size_t e = 0; e < g.n_eq; ++e) {
        if (e == drop) continue;
        for (auto x : g.eq_adj[e]) h.add_edge(out, x);
        ++out;
    }
    return h;
}

}  // namespace

TEST_CASE("two equations sharing one variable") {
    Bipartite g = make(2, 1, {{0, 0}, {1, 0}});
    Matching m = max_matching(g);
    CHECK(m.size == 1);
    Decomposition d = dm_decompose(g, m);
    CHECK(d.eq_part[0] == Part::Over);
    CHECK(d.eq_part[1] == Part::Over);
    CHECK(d.var_part[0] == Part::Over);
}

TEST_CASE("diagonal square system is perfectly matched") {
    Bipartite g;
    g.resize(4, 4);
    for (std::size_t i = 0; i < 4; ++i) g.add_edge(i, i);
    Matching m = max_matching(g);
    CHECK(m.size == 4);
    Decomposition d = dm_decompose(g, m);
    for (auto p : d.eq_part) CHECK(p == Part::Square);
    for (auto p : d.var_part) CHECK(p == Part::Square);
}

TEST_CASE("underdetermined single equation") {
    Bipartite g = make(1, 2, {{0, 0}, {0, 1}});
    Decomposition d = dm_decompose(g);
    CHECK(d.eq_part[0] == Part::Under);
    CHECK(d.var_part[0] == Part::Under);
    CHECK(d.var_part[1] == Part::Under);
}

TEST_CASE("non-maximum matching is detected") {
    // The empty matching on e-x leaves both sides unmatched; alternating
    // reachability then overlaps.
    Bipartite g = make(1, 1, {{0, 0}});
    Matching empty{{-1}, {-1}, 0};
    CHECK_THROWS_AS(dm_decompose(g, empty), std::logic_error);
}

TEST_CASE("matching size equals exhaustive enumeration on small graphs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        Bipartite g = random_graph(rng, 6);
        CHECK(max_matching(g).size == brute_max_matching(g));
    }
}

TEST_CASE("decomposition is invariant under edge-order shuffles") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        Bipartite g = random_graph(rng, 7);
        Decomposition base = dm_decompose(g);
        for (int s = 0; s < 5; ++s) {
            Bipartite h = g;
            for (auto& row : h.eq_adj) std::shuffle(row.begin(), row.end(), rng);
            Decomposition d = dm_decompose(h);
            CHECK(d.eq_part == base.eq_part);
            CHECK(d.var_part == base.var_part);
        }
    }
}

TEST_CASE("E+ equals the structural redundancy test") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
        Bipartite g = random_graph(rng, 8);
        std::size_t full = max_matching(g).size;
        Decomposition d = dm_decompose(g);
        for (std::size_t e = 0; e < g.n_eq; ++e) {
            bool redundant = max_matching(without_equation(g, e)).size == full;
            CHECK((d.eq_part[e] == Part::Over) == redundant);
        }
    }
}

TEST_CASE("partition covers both vertex sets") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        Bipartite g = random_graph(rng, 8);
        Decomposition d = dm_decompose(g);
        CHECK(d.eq_part.size() == g.n_eq);
        CHECK(d.var_part.size() == g.n_var);
        // Surplus property: strictly more equations than variables in the
        // overdetermined part whenever it is non-empty.
        std::size_t eo = std::count(d.eq_part.begin(), d.eq_part.end(), Part::Over);
        std::size_t xo = std::count(d.var_part.begin(), d.var_part.end(), Part::Over);
        if (eo) CHECK(eo > xo);
    }
}
