#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmdiag::dm {

/// Unlabeled bipartite graph between equations and variables.
struct Bipartite {
    std::size_t n_eq = 0;
    std::size_t n_var = 0;
    std::vector<std::vector<std::uint32_t>> eq_adj;  // equation -> variables
    std::vector<std::string> eq_names;               // optional labels
    std::vector<std::string> var_names;

    void resize(std::size_t eqs, std::size_t vars) {
        n_eq = eqs;
        n_var = vars;
        eq_adj.assign(eqs, {});
    }
    void add_edge(std::size_t e, std::size_t x) {
        eq_adj[e].push_back(static_cast<std::uint32_t>(x));
    }
};

struct Matching {
    std::vector<int> eq_to_var;  // -1 = unmatched
    std::vector<int> var_to_eq;
    std::size_t size = 0;
};

/// Hopcroft-Karp maximum matching. Deterministic for a fixed edge ordering;
/// adjacency lists are scanned in lexicographic vertex order.
Matching max_matching(const Bipartite& g);

enum class Part { Under, Square, Over };

struct Decomposition {
    std::vector<Part> eq_part;
    std::vector<Part> var_part;
};

/// Coarse Dulmage-Mendelsohn partition from a maximum matching: vertices
/// reachable by alternating paths from unmatched equations form the
/// overdetermined part, those reachable from unmatched variables the
/// underdetermined part. Throws if the matching is detectably non-maximum.
Decomposition dm_decompose(const Bipartite& g, const Matching& m);

inline Decomposition dm_decompose(const Bipartite& g) { return dm_decompose(g, max_matching(g)); }

}  // namespace mmdiag::dm
