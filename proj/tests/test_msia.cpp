#include <doctest.h>

#include <cmath>
#include <map>

#include "arwlab/error.hpp"
#include "arwlab/msia.hpp"
#include "support.hpp"

using namespace arwlab;

TEST_CASE("stack entries do not depend on request order") {
    const auto net = build_lattice(2, 4, Metric::graph);
    const auto k = srw_kernel(net);
    InstructionStacks a(k, 5), b(k, 5);
    const VertexId x = net.origin();
    const VertexId late = a.at(x, 40);
    for (std::size_t i = 0; i <= 40; ++i) (void)b.at(x, i);
    CHECK(b.at(x, 40) == late);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a.at(x, i) == b.at(x, i));
}

TEST_CASE("three explorers on three sites: settle probabilities 2/3, 1/6, 1/6") {
    // Interior {-1, 0, 1}, all three explorers at 0. The first settles at a
    // neighbor; the second reaches the free neighbor before exiting with
    // probability h = 1/2 + h/4, i.e. 2/3.
    const auto net = build_lattice(1, 2, Metric::graph);
    const auto k = srw_kernel(net);
    const auto occ = Occupation::point(net, net.origin(), 3);
    const VertexId left = *net.find({-1}), right = *net.find({1});
    const int n = 30000;
    std::map<std::vector<VertexId>, int> freq;
    for (int s = 0; s < n; ++s) {
        InstructionStacks stacks(k, s);
        const auto r = run_msia(net, occ, Ordering::lexicographic(net.size()), stacks);
        ++freq[r.occupied.ids];
        CHECK(r.occupied.size() + r.exited == 3);
    }
    const std::vector<VertexId> all = VertexSet({left, net.origin(), right}).ids;
    const std::vector<VertexId> rights = VertexSet({net.origin(), right}).ids;
    const std::vector<VertexId> lefts = VertexSet({left, net.origin()}).ids;
    auto near = [&](int count, double p) { return std::abs(count / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n); };
    CHECK(near(freq[all], 2.0 / 3.0));
    CHECK(near(freq[rights], 1.0 / 6.0));
    CHECK(near(freq[lefts], 1.0 / 6.0));
}

TEST_CASE("orderings reach the same final set from shared stacks") {
    const auto net = build_lattice(2, 4, Metric::box);
    const auto k = srw_kernel(net);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto occ = sample_iid(net, Pmf::poisson(0.35), net.interior_set(), seed);
        const auto lex = Ordering::lexicographic(net.size());
        for (const auto& other : {Ordering::reverse(net.size()), Ordering::random_permutation(net.size(), seed),
                                  Ordering::source_by_source(net.size())}) {
            const auto same = abelian_check(net, k, occ, seed + 100, lex, other);
            REQUIRE(same.has_value());
            CHECK(*same);
        }
    }
}

TEST_CASE("visits and path lengths") {
    const auto net = build_lattice(1, 6, Metric::graph);
    InstructionStacks stacks(srw_kernel(net), 3);
    const auto occ = Occupation::point(net, net.origin(), 4);
    const auto r = run_msia(net, occ, Ordering::lexicographic(net.size()), stacks);
    std::uint64_t steps = 0;
    for (auto l : r.path_lengths) steps += l;
    CHECK(steps == r.total_steps);
    CHECK(r.path_lengths.size() == 3);
    CHECK(r.visits[net.origin()] >= 1);
    CHECK(r.occupied.contains(net.origin()));
}

TEST_CASE("preconditions") {
    const auto net = build_lattice(1, 4, Metric::graph);
    const auto k = srw_kernel(net);
    InstructionStacks stacks(k, 1);
    const auto outside = Occupation::point(net, *net.find({4}), 2);
    CHECK_THROWS_AS(run_msia(net, outside, Ordering::lexicographic(net.size()), stacks), Error);
    Ordering partial{"partial", {0}, Ordering::Mode::round_robin};
    const auto occ = Occupation::point(net, net.origin(), 2);
    if (net.origin() != 0) CHECK_THROWS_AS(run_msia(net, occ, partial, stacks), Error);
}

TEST_CASE("ghost statistics bookkeeping") {
    const auto net = build_lattice(1, 15, Metric::graph);
    const auto k = srw_kernel(net);
    const auto region = net.interior_set();
    const auto occ = Occupation::constant(net, region, 2);
    const auto g = run_with_ghosts(net, k, occ, net.origin(), region, 4, 9.0);
    CHECK(g.explorers == occ.total());
    CHECK(g.walks_hitting == g.explorer_hits + g.ghost_hits);
    CHECK(g.walks_hitting <= g.explorers);
    CHECK(g.independent_hits <= region.size());
    REQUIRE(g.event_f.has_value());
    CHECK(*g.event_f == (static_cast<double>(g.explorer_hits) < 3.0));
    CHECK(g.third_delta() == 3.0);
    CHECK_FALSE(g.inconclusive);
    CHECK_THROWS_AS(run_with_ghosts(net, k, occ, *net.find({15}), region, 1), Error);
}

TEST_CASE("ghost walks from occupied-once vertices: E[W] = sum of p_x") {
    // eta = 1 on the interval |x| < 10: nothing moves, every ghost walks
    // from its start, so E[W] = sum_x (1 - |x|/10) = 10.
    const auto net = build_lattice(1, 10, Metric::graph);
    const auto k = srw_kernel(net);
    const auto occ = Occupation::constant(net, net.interior_set(), 1);
    double w = 0.0, lhat = 0.0;
    const int n = 2000;
    for (int s = 0; s < n; ++s) {
        const auto g = run_with_ghosts(net, k, occ, net.origin(), net.interior_set(), s);
        w += g.walks_hitting;
        lhat += g.independent_hits;
        CHECK(g.explorer_hits == 1); // the stayer at the target itself
    }
    // Var W = sum p(1 - p) < 10 / 3
    CHECK(std::abs(w / n - 10.0) < 4 * std::sqrt(3.4 / n));
    CHECK(std::abs(lhat / n - 10.0) < 4 * std::sqrt(3.4 / n));
}

TEST_CASE("coupled replay dominates on closed graphs and on absorbing windows") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const bool lattice = seed % 2;
        const auto net = lattice ? build_lattice(1, 8, Metric::graph) : testing::random_graph(16, 10, seed);
        const auto eta = sample_iid(net, Pmf::poisson(0.45), net.interior_set(), seed);
        std::vector<std::uint32_t> g(eta.size());
        rng::Stream s(seed, rng::Tag::trial);
        for (VertexId v = 0; v < eta.size(); ++v)
            for (std::uint32_t i = 0; i < eta[v]; ++i) g[v] += s.uniform() < 0.7;
        const Occupation gamma(g, {"thinning"});
        ArwConfig cfg;
        cfg.initial = eta;
        cfg.sleep_rate = seed % 3 ? infinite_rate : 1.0;
        cfg.boundary = lattice ? Boundary::absorbing : Boundary::closed;
        cfg.seed = seed;
        const auto r = simulate(net, srw_kernel(net), cfg);
        if (!r.stabilized) continue;
        const auto rep = coupled_replay(net, r, gamma, eta);
        CHECK(rep.success);
        CHECK_FALSE(rep.inconclusive);
        for (VertexId v = 0; v < net.size(); ++v) CHECK(rep.consumed[v] <= rep.available[v]);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("coupled replay with gamma = eta reproduces MSIA visits bound") {
    const auto net = build_lattice(1, 8, Metric::graph);
    const auto eta = Occupation::point(net, net.origin(), 4);
    ArwConfig cfg;
    cfg.initial = eta;
    cfg.boundary = Boundary::absorbing;
    cfg.seed = 3;
    const auto r = simulate(net, srw_kernel(net), cfg);
    const auto rep = coupled_replay(net, r, eta, eta);
    CHECK(rep.success);
    // Explorer visits never exceed ARW visits (the coupling is a marginal).
    for (VertexId v = 0; v < net.size(); ++v) CHECK(rep.explorer_visits[v] <= r.visits[v]);
    CHECK_THROWS_AS(coupled_replay(net, r, Occupation::point(net, net.origin(), 5), eta), Error);
}
