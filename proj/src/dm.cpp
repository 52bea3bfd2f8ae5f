#include "mmdiag/dm.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace mmdiag::dm {

namespace {
constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();
}

Matching max_matching(const Bipartite& g) {
    std::vector<std::vector<std::uint32_t>> adj = g.eq_adj;
    for (auto& row : adj) std::sort(row.begin(), row.end());

    std::vector<int> eq_match(g.n_eq, -1), var_match(g.n_var, -1);
    std::vector<std::uint32_t> dist(g.n_eq);

    auto bfs = [&]() {
        std::queue<std::uint32_t> q;
        for (std::size_t e = 0; e < g.n_eq; ++e) {
            if (eq_match[e] == -1) {
                dist[e] = 0;
                q.push(static_cast<std::uint32_t>(e));
            } else {
                dist[e] = kInf;
            }
        }
        bool found = false;
        while (!q.empty()) {
            std::uint32_t e = q.front();
            q.pop();
            for (std::uint32_t x : adj[e]) {
                int e2 = var_match[x];
                if (e2 == -1) {
                    found = true;
                } else if (dist[e2] == kInf) {
                    dist[e2] = dist[e] + 1;
                    q.push(static_cast<std::uint32_t>(e2));
                }
            }
        }
        return found;
    };

    auto dfs = [&](auto&& self, std::uint32_t e) -> bool {
        for (std::uint32_t x : adj[e]) {
            int e2 = var_match[x];
            if (e2 == -1 || (dist[e2] == dist[e] + 1 && self(self, static_cast<std::uint32_t>(e2)))) {
                eq_match[e] = static_cast<int>(x);
                var_match[x] = static_cast<int>(e);
                return true;
            }
        }
        dist[e] = kInf;
        return false;
    };

    std::size_t size = 0;
    while (bfs()) {
        for (std::size_t e = 0; e < g.n_eq; ++e)
            if (eq_match[e] == -1 && dfs(dfs, static_cast<std::uint32_t>(e))) ++size;
    }
    return Matching{std::move(eq_match), std::move(var_match), size};
}

Decomposition dm_decompose(const Bipartite& g, const Matching& m) {
    std::vector<std::vector<std::uint32_t>> var_adj(g.n_var);
    for (std::size_t e = 0; e < g.n_eq; ++e)
        for (std::uint32_t x : g.eq_adj[e]) var_adj[x].push_back(static_cast<std::uint32_t>(e));

    std::vector<bool> eq_over(g.n_eq, false), var_over(g.n_var, false);
    std::vector<bool> eq_under(g.n_eq, false), var_under(g.n_var, false);

    // Alternating reachability from unmatched equations: equation -> variable
    // along any edge, variable -> equation along its matched edge.
    {
        std::queue<std::uint32_t> q;
        for (std::size_t e = 0; e < g.n_eq; ++e)
            if (m.eq_to_var[e] == -1) {
                eq_over[e] = true;
                q.push(static_cast<std::uint32_t>(e));
            }
        while (!q.empty()) {
            std::uint32_t e = q.front();
            q.pop();
            for (std::uint32_t x : g.eq_adj[e]) {
                if (var_over[x]) continue;
                var_over[x] = true;
                int e2 = m.var_to_eq[x];
                if (e2 != -1 && !eq_over[e2]) {
                    eq_over[e2] = true;
                    q.push(static_cast<std::uint32_t>(e2));
                }
            }
        }
    }
    // Mirror image from unmatched variables.
    {
        std::queue<std::uint32_t> q;
        for (std::size_t x = 0; x < g.n_var; ++x)
            if (m.var_to_eq[x] == -1) {
                var_under[x] = true;
                q.push(static_cast<std::uint32_t>(x));
            }
        while (!q.empty()) {
            std::uint32_t x = q.front();
            q.pop();
            for (std::uint32_t e : var_adj[x]) {
                if (eq_under[e]) continue;
                eq_under[e] = true;
                int x2 = m.eq_to_var[e];
                if (x2 != -1 && !var_under[x2]) {
                    var_under[x2] = true;
                    q.push(static_cast<std::uint32_t>(x2));
                }
            }
        }
    }

    Decomposition d;
    d.eq_part.resize(g.n_eq);
    d.var_part.resize(g.n_var);
    for (std::size_t e = 0; e < g.n_eq; ++e) {
        if (eq_over[e] && eq_under[e])
            throw std::logic_error("dm_decompose: matching is not maximum");
        d.eq_part[e] = eq_over[e] ? Part::Over : eq_under[e] ? Part::Under : Part::Square;
    }
    for (std::size_t x = 0; x < g.n_var; ++x) {
        if (var_over[x] && var_under[x])
            throw std::logic_error("dm_decompose: matching is not maximum");
        d.var_part[x] = var_over[x] ? Part::Over : var_under[x] ? Part::Under : Part::Square;
    }
    return d;
}

}  // namespace mmdiag::dm
