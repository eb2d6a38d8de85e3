#pragma once

// Test-side helpers and independent oracles. Nothing here calls the code
// under test for the quantity being checked.

#include <cstdint>
#include <deque>
#include <vector>

#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"
#include "arwlab/rng.hpp"

namespace testing {

using arwlab::EdgeSpec;
using arwlab::Network;
using arwlab::VertexId;

// Unembedded w x h grid, vertex id = y * w + x.
inline Network grid(int w, int h, double c = 1.0) {
    std::vector<EdgeSpec> e;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto v = static_cast<VertexId>(y * w + x);
            if (x + 1 < w) e.push_back({v, v + 1, c});
            if (y + 1 < h) e.push_back({v, static_cast<VertexId>(v + w), c});
        }
    return Network(static_cast<std::size_t>(w * h), e);
}

// Unembedded path 0 - 1 - ... - (n-1).
inline Network path(int n) {
    std::vector<EdgeSpec> e;
    for (int i = 0; i + 1 < n; ++i) e.push_back({VertexId(i), VertexId(i + 1), 1.0});
    return Network(static_cast<std::size_t>(n), e);
}

// Random connected graph: a random spanning tree plus extra edges.
inline Network random_graph(int n, int extra, std::uint64_t seed) {
    arwlab::rng::Stream s(seed);
    std::vector<EdgeSpec> e;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (int v = 1; v < n; ++v) {
        const int u = static_cast<int>(s.below(static_cast<std::uint64_t>(v)));
        e.push_back({VertexId(u), VertexId(v), 0.5 + 1.5 * s.uniform()});
        adj[u][v] = adj[v][u] = 1;
    }
    for (int k = 0; k < extra; ++k) {
        const int u = static_cast<int>(s.below(n)), v = static_cast<int>(s.below(n));
        if (u == v || adj[u][v]) continue;
        adj[u][v] = adj[v][u] = 1;
        e.push_back({VertexId(u), VertexId(v), 0.5 + 1.5 * s.uniform()});
    }
    return Network(static_cast<std::size_t>(n), e);
}

// W(n) for every n by checking all 2^|V| subsets (|V| <= 20).
inline std::vector<std::uint64_t> brute_force_W(const Network& net, const std::vector<std::uint32_t>& eta,
                                                VertexId origin) {
    const std::size_t n = net.size();
    std::vector<std::uint64_t> best(n + 1, 0);
    std::vector<char> seen_size(n + 1, 0);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (!(mask >> origin & 1u)) continue;
        std::uint32_t reached = 1u << origin;
        std::deque<VertexId> q{origin};
        while (!q.empty()) {
            const VertexId x = q.front();
            q.pop_front();
            for (const auto& nb : net.neighbors(x))
                if ((mask >> nb.to & 1u) && !(reached >> nb.to & 1u)) {
                    reached |= 1u << nb.to;
                    q.push_back(nb.to);
                }
        }
        if (reached != mask) continue;
        std::uint64_t w = 0;
        std::size_t size = 0;
        for (VertexId v = 0; v < n; ++v)
            if (mask >> v & 1u) {
                w += eta[v];
                ++size;
            }
        if (!seen_size[size] || w > best[size]) best[size] = w;
        seen_size[size] = 1;
    }
    return best;
}

} // namespace testing
