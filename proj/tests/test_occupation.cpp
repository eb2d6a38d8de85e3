#include <doctest.h>

#include <cmath>
#include <sstream>

#include "arwlab/error.hpp"
#include "arwlab/occupation.hpp"
#include "arwlab/rng.hpp"

using namespace arwlab;

TEST_CASE("poisson pmf against the closed form") {
    const auto p = Pmf::poisson(1.5);
    double s = 0.0;
    for (int k = 0; k < 40; ++k) {
        const double expected = std::exp(-1.5 + k * std::log(1.5) - std::lgamma(k + 1.0));
        CHECK(p.mass(k) == doctest::Approx(expected).epsilon(1e-12));
        s += p.mass(k);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.mean() == doctest::Approx(1.5));
    CHECK(p.variance() == doctest::Approx(1.5));
    CHECK(p.tail(0) == doctest::Approx(1.0 - std::exp(-1.5)).epsilon(1e-12));
    CHECK(p.tail(2) == doctest::Approx(1.0 - std::exp(-1.5) * (1 + 1.5 + 1.125)).epsilon(1e-12));
}

TEST_CASE("table pmf validation") {
    CHECK_THROWS_AS(Pmf::table({0.5, 0.4}), Error);
    CHECK_THROWS_AS(Pmf::table({1.2, -0.2}), Error);
    CHECK_THROWS_AS(Pmf::table({}), Error);
    CHECK_THROWS_AS(Pmf::bernoulli(1.5), Error);
    CHECK_THROWS_AS(Pmf::poisson(-1.0), Error);
    const auto t = Pmf::table({0.25, 0.5, 0.25});
    CHECK(t.mean() == doctest::Approx(1.0));
    CHECK(t.variance() == doctest::Approx(0.5));
    CHECK(t.tail(0) == doctest::Approx(0.75));
    CHECK(t.tail(2) == 0.0);
}

TEST_CASE("inverse-cdf sampling boundaries") {
    const auto t = Pmf::table({0.25, 0.5, 0.25});
    CHECK(t.sample(0.0) == 0);
    CHECK(t.sample(0.2499) == 0);
    CHECK(t.sample(0.25) == 1);
    CHECK(t.sample(0.7499) == 1);
    CHECK(t.sample(0.75) == 2);
    CHECK(Pmf::dirac(3).sample(0.5) == 3);
}

TEST_CASE("sampled frequencies match the law") {
    const auto p = Pmf::poisson(0.7);
    rng::Stream s(99);
    std::vector<int> counts(10, 0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto k = p.sample(s.uniform());
        if (k < counts.size()) ++counts[k];
    }
    for (int k = 0; k < 4; ++k) {
        const double q = p.mass(k);
        CHECK(std::abs(counts[k] / double(n) - q) < 4 * std::sqrt(q * (1 - q) / n));
    }
}

TEST_CASE("pmf json round trip") {
    for (const auto& p : {Pmf::poisson(2.0), Pmf::bernoulli(0.3), Pmf::dirac(4), Pmf::table({0.1, 0.9})}) {
        const auto q = Pmf::from_json(p.to_json());
        for (int k = 0; k < 8; ++k) CHECK(q.mass(k) == p.mass(k));
    }
    CHECK_THROWS_AS(Pmf::from_json({{"type", "geometric"}}), Error);
}

TEST_CASE("iid sampling is window independent on lattices") {
    const auto small = build_lattice(2, 5, Metric::box);
    const auto large = build_lattice(2, 12, Metric::euclidean);
    const auto pmf = Pmf::poisson(1.0);
    const auto a = sample_iid(small, pmf, small.interior_set(), 17);
    const auto b = sample_iid(large, pmf, large.interior_set(), 17);
    for (VertexId v = 0; v < small.size(); ++v) {
        if (!small.interior(v)) {
            CHECK(a[v] == 0);
            continue;
        }
        const auto w = large.find(small.coords(v));
        REQUIRE(w.has_value());
        CHECK(a[v] == b[*w]);
    }
    CHECK(a.provenance().seed == 17);
    CHECK(sample_iid(small, pmf, small.interior_set(), 17) == a);
    CHECK_FALSE(sample_iid(small, pmf, small.interior_set(), 18) == a);
}

TEST_CASE("constant, point, restrict, window average") {
    const auto net = build_lattice(1, 5, Metric::graph);
    const auto c = Occupation::constant(net, net.interior_set(), 2);
    CHECK(c.total() == 18);
    CHECK(window_average(c, net.interior_set()) == 2.0);
    const auto p = Occupation::point(net, net.origin(), 3);
    CHECK(p.total() == 3);
    CHECK(p.support().ids == std::vector<VertexId>{net.origin()});
    const auto r = restrict(c, VertexSet({net.origin()}));
    CHECK(r.total() == 2);
    CHECK(dominated_by(r, c));
    CHECK_FALSE(dominated_by(c, r));
    CHECK_THROWS_AS(window_average(c, VertexSet{}), Error);
}

TEST_CASE("occupation csv round trip keeps provenance") {
    const auto net = build_lattice(2, 4, Metric::graph);
    const auto occ = sample_iid(net, Pmf::poisson(1.3), net.interior_set(), 5);
    std::stringstream ss;
    write_occupation_csv(ss, occ);
    CHECK(ss.str().rfind("# provenance: ", 0) == 0);
    const auto back = read_occupation_csv(ss);
    CHECK(back == occ);
    CHECK(back.provenance().seed == 5);
    CHECK(back.provenance().sampler == occ.provenance().sampler);
}

TEST_CASE("ergodic samplers: empirical mean approaches declared mean") {
    const auto net = build_lattice(2, 60, Metric::box);
    const auto region = net.interior_set();

    const ErgodicSpec rot = RotationField{0, 3, 0.4, {}};
    CHECK(declared_mean(rot) == doctest::Approx(1.2));
    CHECK(window_average(sample_ergodic(net, rot, region, 1), region) == doctest::Approx(1.2).epsilon(0.02));

    HiddenMarkovField hmm;
    hmm.transition = {{0.9, 0.1}, {0.2, 0.8}};
    hmm.emissions = {Pmf::poisson(0.5), Pmf::poisson(2.0)};
    const auto pi = hmm.stationary();
    CHECK(pi[0] == doctest::Approx(2.0 / 3.0));
    const ErgodicSpec h = hmm;
    CHECK(declared_mean(h) == doctest::Approx(2.0 / 3.0 * 0.5 + 1.0 / 3.0 * 2.0));
    CHECK(window_average(sample_ergodic(net, h, region, 2), region) == doctest::Approx(declared_mean(h)).epsilon(0.05));

    const ErgodicSpec iid = IidField{Pmf::poisson(0.9)};
    CHECK(window_average(sample_ergodic(net, iid, region, 3), region) == doctest::Approx(0.9).epsilon(0.03));
}

TEST_CASE("ergodic spec json") {
    const auto spec = ergodic_spec_from_json({{"type", "rotation"}, {"low", 1}, {"high", 2}, {"high_frequency", 0.5}});
    CHECK(declared_mean(spec) == doctest::Approx(1.5));
    const auto again = ergodic_spec_from_json(to_json(spec));
    CHECK(declared_mean(again) == doctest::Approx(1.5));
    try {
        (void)ergodic_spec_from_json({{"type", "fractal"}});
        FAIL("accepted unknown sampler");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}
