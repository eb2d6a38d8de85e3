#include <doctest.h>

#include <cmath>
#include <deque>
#include <sstream>

#include "arwlab/animals.hpp"
#include "arwlab/error.hpp"
#include "support.hpp"

using namespace arwlab;

namespace {

std::vector<std::uint32_t> random_counts(std::size_t n, std::uint64_t seed) {
    rng::Stream s(seed);
    std::vector<std::uint32_t> c(n);
    for (auto& x : c) x = static_cast<std::uint32_t>(s.below(4)); // 0..3
    return c;
}

bool witness_ok(const Network& net, const Animal& a, VertexId origin, std::size_t n, const Occupation& occ) {
    if (a.witness.size() != n || !a.witness.contains(origin)) return false;
    std::uint64_t w = 0;
    for (VertexId v : a.witness.ids) w += occ[v];
    if (w != a.weight) return false;
    std::vector<char> seen(net.size(), 0);
    std::deque<VertexId> q{origin};
    seen[origin] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const VertexId x = q.front();
        q.pop_front();
        for (const auto& nb : net.neighbors(x))
            if (a.witness.contains(nb.to) && !seen[nb.to]) {
                seen[nb.to] = 1;
                ++reached;
                q.push_back(nb.to);
            }
    }
    return reached == n;
}

} // namespace

TEST_CASE("point mass 3 at the origin: W = 3, threshold 3") {
    const auto net = build_lattice(1, 10, Metric::graph);
    const auto occ = Occupation::point(net, net.origin(), 3);
    const auto rep = threshold_A(occ, net, net.origin(), 12);
    for (std::size_t n = 1; n <= 12; ++n) CHECK(rep.W[n] == 3);
    CHECK(rep.threshold == 3);
    CHECK_FALSE(rep.unbounded);
    CHECK(rep.method[5] == AnimalMethod::exact_path);

    // Same field on an unembedded copy uses enumeration.
    const auto g = testing::path(21);
    const auto rep2 = threshold_A(Occupation::point(g, 10, 3), g, 10, 8);
    CHECK(rep2.threshold == 3);
    CHECK(rep2.method[4] == AnimalMethod::exact_enumeration);
}

TEST_CASE("empty and full fields") {
    const auto net = build_lattice(2, 4, Metric::graph);
    const auto zero = threshold_A(Occupation(net.size()), net, net.origin(), 6);
    CHECK(zero.threshold == 0);
    for (std::size_t n = 1; n <= 6; ++n) CHECK(zero.W[n] == 0);
    std::vector<std::uint32_t> ones(net.size(), 1);
    const auto full = threshold_A(Occupation(ones, {"ones"}), net, net.origin(), 6);
    for (std::size_t n = 1; n <= 6; ++n) CHECK(full.W[n] == n);
    CHECK(full.unbounded);
    CHECK(full.threshold == 6);
    CHECK(full.density_max == 1.0);
}

TEST_CASE("pruned enumeration equals brute force on small windows") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto g = seed % 3 == 0 ? testing::path(13) : seed % 3 == 1 ? testing::grid(4, 4) : testing::grid(3, 5);
        const auto counts = random_counts(g.size(), seed);
        const Occupation occ(counts, {"random"});
        const VertexId origin = static_cast<VertexId>(seed % g.size());
        const auto oracle = testing::brute_force_W(g, counts, origin);
        for (std::size_t n = 1; n <= g.size(); ++n) {
            const auto a = max_weight_animal(occ, g, origin, n);
            CHECK(a.method == AnimalMethod::exact_enumeration);
            CHECK(a.weight == oracle[n]);
            CHECK(witness_ok(g, a, origin, n, occ));
        }
    }
}

TEST_CASE("1-D interval method equals brute force") {
    const auto net = build_lattice(1, 7, Metric::graph); // 13 interior + 2 boundary
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto counts = random_counts(net.size(), seed + 50);
        const Occupation occ(counts, {"random"});
        const auto oracle = testing::brute_force_W(net, counts, net.origin());
        for (std::size_t n = 1; n <= net.size(); ++n) {
            const auto a = max_weight_animal(occ, net, net.origin(), n);
            CHECK(a.method == AnimalMethod::exact_path);
            CHECK(a.weight == oracle[n]);
            CHECK(witness_ok(net, a, net.origin(), n, occ));
        }
    }
}

TEST_CASE("heuristic above the cap is a labelled lower bound") {
    const auto g = testing::grid(5, 5);
    const auto counts = random_counts(g.size(), 3);
    const Occupation occ(counts, {"random"});
    AnimalOptions exact, cheap;
    cheap.exact_cap = 2;
    for (std::size_t n = 3; n <= 9; ++n) {
        const auto e = max_weight_animal(occ, g, 12, n, exact);
        const auto h = max_weight_animal(occ, g, 12, n, cheap);
        CHECK(h.method == AnimalMethod::heuristic);
        CHECK(h.weight <= e.weight);
        CHECK(witness_ok(g, h, 12, n, occ));
    }
    const auto rep = threshold_A(occ, g, 12, 12, cheap);
    for (std::size_t n = 2; n <= 12; ++n) CHECK(rep.W[n] >= rep.W[n - 1]);
    CHECK((rep.lower_bound_only || rep.unbounded));
}

TEST_CASE("node budget falls back to the heuristic") {
    const auto g = testing::grid(6, 6);
    const Occupation occ(random_counts(g.size(), 8), {"random"});
    AnimalOptions tiny;
    tiny.node_budget = 10;
    const auto a = max_weight_animal(occ, g, 14, 10, tiny);
    CHECK(a.method == AnimalMethod::heuristic);
    CHECK(witness_ok(g, a, 14, 10, occ));
}

TEST_CASE("W is nondecreasing and at least eta(origin)") {
    const auto net = build_lattice(2, 5, Metric::euclidean);
    const auto occ = sample_iid(net, Pmf::poisson(0.6), net.interior_set(), 2);
    const auto rep = threshold_A(occ, net, net.origin(), 10);
    for (std::size_t n = 1; n <= 10; ++n) {
        CHECK(rep.W[n] >= occ[net.origin()]);
        if (n > 1) CHECK(rep.W[n] >= rep.W[n - 1]);
    }
}

TEST_CASE("size errors") {
    const auto g = testing::path(5);
    CHECK_THROWS_AS(max_weight_animal(Occupation(5), g, 0, 6), Error);
    CHECK_THROWS_AS(max_weight_animal(Occupation(5), g, 0, 0), Error);
    CHECK_THROWS_AS(threshold_A(Occupation(5), g, 0, 0), Error);
}

TEST_CASE("containment needs lambda = infinity and nearest-neighbor moves") {
    const auto net = build_lattice(1, 10, Metric::graph);
    const auto occ = Occupation::point(net, net.origin(), 3);
    const auto rep = threshold_A(occ, net, net.origin(), 8);
    ArwConfig cfg;
    cfg.initial = occ;
    cfg.boundary = Boundary::closed;
    for (std::uint64_t s = 0; s < 50; ++s) {
        cfg.seed = s;
        CHECK(containment_check(simulate(net, srw_kernel(net), cfg), rep));
    }
    cfg.sleep_rate = 1.0;
    CHECK_THROWS_AS(containment_check(simulate(net, srw_kernel(net), cfg), rep), Error);
}

TEST_CASE("tail condition") {
    CHECK(tail_condition(Pmf::bernoulli(0.25), 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tail_condition(Pmf::dirac(0), 3) == 0.0);
    // P[X > n] for a table, summed by hand.
    CHECK(tail_condition(Pmf::table({0.5, 0.25, 0.25}), 2) == doctest::Approx(std::sqrt(0.5) + std::sqrt(0.25)));
    const double a = tail_condition(Pmf::poisson(0.4), 2);
    const double b = tail_condition(Pmf::poisson(0.2), 2);
    const double c = tail_condition(Pmf::poisson(0.1), 2);
    CHECK(a > b);
    CHECK(b > c);
    CHECK(c > 0.0);
    CHECK_THROWS_AS(tail_condition(Pmf::poisson(0.1), 1), Error);
}

TEST_CASE("low-density 1-D fields: W(n) < n for all large n") {
    // Law of large numbers echo: mean 0.5, window of 10^4 sites.
    const auto net = build_lattice(1, 5000, Metric::graph);
    const std::size_t n0 = 20, n_max = 200;
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto occ = sample_iid(net, Pmf::poisson(0.5), net.interior_set(), seed);
        const auto rep = threshold_A(occ, net, net.origin(), n_max);
        bool ok = true;
        for (std::size_t n = n0; n <= n_max; ++n) ok = ok && rep.W[n] < n;
        failures += !ok;
    }
    CHECK(failures <= 5);
}

TEST_CASE("report serialization") {
    const auto net = build_lattice(1, 5, Metric::graph);
    const auto rep = threshold_A(Occupation::point(net, net.origin(), 2), net, net.origin(), 4);
    const auto j = to_json(rep);
    CHECK(j.at("threshold") == 2);
    CHECK(j.at("table").size() == 4);
    std::ostringstream os;
    write_animal_csv(os, rep);
    CHECK(os.str().rfind("n,W,method\r\n1,2,exact-path\r\n", 0) == 0);
}
