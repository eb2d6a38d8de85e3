#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "arwlab/criterion.hpp"
#include "arwlab/error.hpp"
#include "support.hpp"

using namespace arwlab;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::configuration; // sentinel: nothing thrown
}

} // namespace

TEST_CASE("gambler's ruin: p_x = 1 - |x|/m on Z^1") {
    const int m = 10;
    const auto net = build_lattice(1, m, Metric::graph);
    const auto hp = hitting_profile(net, srw_kernel(net), net.interior_set(), net.origin());
    for (VertexId v = 0; v < net.size(); ++v) {
        const int x = net.coords(v)[0];
        const double expected = std::abs(x) < m ? 1.0 - std::abs(x) / double(m) : 0.0;
        CHECK(hp.p[v] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(hp.p[*net.find({4})] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(hp.p[net.origin()] == 1.0);
    CHECK(hp.residual <= 1e-10);
}

TEST_CASE("dense oracle on a random weighted graph") {
    // Independent dense solve of the same Dirichlet problem.
    const auto net = testing::random_graph(30, 40, 11);
    const auto k = srw_kernel(net);
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < 24; ++v) ids.push_back(v);
    const VertexSet region(ids);
    const VertexId target = 3;
    const auto hp = hitting_profile(net, k, region, target);

    std::vector<VertexId> unk;
    for (VertexId v : ids)
        if (v != target) unk.push_back(v);
    const auto n = static_cast<Eigen::Index>(unk.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const VertexId x = unk[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) -= net.conductance(x, unk[static_cast<std::size_t>(j)]) / net.weight(x);
        b[i] = net.conductance(x, target) / net.weight(x);
    }
    const Eigen::VectorXd p = A.colPivHouseholderQr().solve(b);
    for (Eigen::Index i = 0; i < n; ++i) CHECK(hp.p[unk[static_cast<std::size_t>(i)]] == doctest::Approx(p[i]).epsilon(1e-9));
    CHECK(hp.residual <= 1e-10);
}

TEST_CASE("components cut off from the target get exactly zero") {
    const auto net = build_lattice(1, 10, Metric::graph);
    std::vector<VertexId> ids{net.origin(), *net.find({1}), *net.find({5}), *net.find({6})};
    const auto hp = hitting_profile(net, srw_kernel(net), VertexSet(ids), net.origin());
    CHECK(hp.p[*net.find({5})] == 0.0);
    CHECK(hp.p[*net.find({6})] == 0.0);
    CHECK(hp.p[*net.find({1})] == doctest::Approx(0.5));
}

TEST_CASE("Green function and exit times on Z^1") {
    for (int m : {10, 25}) {
        const auto net = build_lattice(1, m, Metric::graph);
        const auto k = srw_kernel(net);
        CHECK(greens(net, k, net.interior_set(), net.origin(), net.origin()) == doctest::Approx(m).epsilon(1e-12));
        RegionSolver solver(k, net.interior_set());
        const auto tau = solver.exit_times();
        for (VertexId v : net.interior_set().ids) {
            const int x = net.coords(v)[0];
            CHECK(tau[v] == doctest::Approx(double(m) * m - double(x) * x).epsilon(1e-10));
        }
        const auto g = solver.green_column(net.origin());
        for (VertexId v : net.interior_set().ids) CHECK(g[v] >= 0.0);
    }
}

TEST_CASE("Monte Carlo agrees with the linear solve") {
    const auto net = build_lattice(2, 20, Metric::graph);
    const auto k = srw_kernel(net);
    const auto region = net.interior_set();
    const VertexId x = *net.find({1, 0});
    const auto exact = hitting_profile(net, k, region, net.origin());
    MonteCarloOptions mc{100'000, 21};
    const auto est = hitting_probability_mc(k, region, net.origin(), x, mc);
    CHECK(std::abs(est.mean - exact.p[x]) < 3 * est.std_error);

    MonteCarloOptions small{400, 5};
    const auto net1 = build_lattice(1, 6, Metric::graph);
    const auto k1 = srw_kernel(net1);
    const auto exact1 = hitting_profile(net1, k1, net1.interior_set(), net1.origin());
    const auto mcp = hitting_profile(net1, k1, net1.interior_set(), net1.origin(), SolveMethod::monte_carlo, small);
    int within = 0, total = 0;
    for (VertexId v : net1.interior_set().ids) {
        if (v == net1.origin()) continue;
        ++total;
        within += std::abs(mcp.p[v] - exact1.p[v]) <= 3 * mcp.std_error[v] + 1e-12;
    }
    CHECK(within >= 0.95 * total - 1);

    const auto gmc = greens_mc(k1, net1.interior_set(), net1.origin(), net1.origin(), {20000, 3});
    CHECK(std::abs(gmc.mean - 6.0) < 4 * gmc.std_error);
}

TEST_CASE("reversibility of the Green function with random conductances") {
    const auto net = build_lattice(2, 5, Metric::box, [](std::span<const int> a, std::span<const int> b) {
        rng::Stream s(static_cast<std::uint64_t>((a[0] + 50) * 1000 + (a[1] + 50) * 10 + (b[0] + 50) * 7 + b[1] + 50));
        return 0.5 + 1.5 * s.uniform();
    });
    const auto k = srw_kernel(net);
    rng::Stream pick(1);
    for (int i = 0; i < 20; ++i) {
        const auto& ids = net.interior_set().ids;
        const VertexId x = ids[pick.below(ids.size())];
        CHECK(reversibility_check(net, k, net.interior_set(), x, net.origin()) <= 1e-8);
    }
    CHECK(reversibility_check(net, k, net.interior_set(), net.origin(), net.origin()) == 0.0);
    const Kernel lazy({{{1, 1.0}}, {{0, 0.5}, {1, 0.5}}}, false, false);
    CHECK(kind_of([&] { reversibility_check(testing::path(2), lazy, VertexSet({0, 1}), 0, 1); }) == ErrorKind::unsupported);
}

TEST_CASE("criterion series: exact sums on Z^1") {
    const auto net = build_lattice(1, 401, Metric::graph);
    const auto k = srw_kernel(net);
    const std::vector<int> sched{25, 100, 400};

    const auto two = criterion_series(Occupation::constant(net, net.interior_set(), 2), net, k, sched, net.origin(),
                                      Metric::graph);
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const auto& r = two.rows[i];
        CHECK(r.lambda == doctest::Approx(sched[i]).epsilon(1e-10));
        CHECK(r.omega == doctest::Approx(2.0 * sched[i]).epsilon(1e-10));
        CHECK(r.delta == r.omega - r.lambda);
        CHECK(std::abs(r.ratio - std::sqrt(sched[i])) <= 1e-6);
        CHECK(r.green_origin == doctest::Approx(sched[i]).epsilon(1e-10));
        CHECK(r.exit_time == doctest::Approx(double(sched[i]) * sched[i]).epsilon(1e-10));
    }
    CHECK(two.verdict.trend_positive);
    REQUIRE(two.verdict.growth_exponent.has_value());
    CHECK(*two.verdict.growth_exponent == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(two.verdict.label.find("evidence") != std::string::npos);

    const auto one = criterion_series(Occupation::constant(net, net.interior_set(), 1), net, k, sched, net.origin(),
                                      Metric::graph);
    for (const auto& r : one.rows) CHECK(std::abs(r.ratio) <= 1e-9);
    CHECK_FALSE(one.verdict.trend_positive);

    const auto point = criterion_series(Occupation::point(net, net.origin(), 5), net, k, sched, net.origin(),
                                        Metric::graph);
    for (const auto& r : point.rows) {
        CHECK(r.omega == doctest::Approx(5.0));
        CHECK(r.delta == doctest::Approx(5.0 - r.m).epsilon(1e-9));
    }
    CHECK_FALSE(point.verdict.trend_positive);
}

TEST_CASE("criterion series validation") {
    const auto net = build_lattice(1, 30, Metric::graph);
    const auto k = srw_kernel(net);
    const auto occ = Occupation::constant(net, net.interior_set(), 1);
    CHECK(kind_of([&] { criterion_series(occ, net, k, {10, 5}, net.origin(), Metric::graph); }) ==
          ErrorKind::invalid_parameter);
    CHECK(kind_of([&] { criterion_series(occ, net, k, {}, net.origin(), Metric::graph); }) ==
          ErrorKind::invalid_parameter);
    CHECK(kind_of([&] { criterion_series(occ, net, k, {10, 40}, net.origin(), Metric::graph); }) ==
          ErrorKind::invalid_parameter);
}

TEST_CASE("lambda lower bound by exit time over Green value") {
    const auto net = build_lattice(2, 9, Metric::euclidean, [](std::span<const int> a, std::span<const int> b) {
        return 1.0 + 0.5 * ((a[0] + a[1] + b[0] + b[1]) % 2 != 0);
    });
    const auto k = srw_kernel(net);
    double lo = 1e300, hi = 0.0;
    for (VertexId v = 0; v < net.size(); ++v) {
        lo = std::min(lo, net.weight(v));
        hi = std::max(hi, net.weight(v));
    }
    const auto occ = Occupation::constant(net, net.interior_set(), 1);
    const auto s = criterion_series(occ, net, k, {4, 6, 9}, net.origin(), Metric::euclidean);
    for (const auto& r : s.rows) CHECK(r.lambda >= (lo / hi) * r.exit_time / r.green_origin);
    for (const auto& r : s.rows) CHECK(r.lambda >= 1.0);
}

TEST_CASE("exit-time diagnostic in 1-D: ratio = ln m") {
    for (int m : {8, 32}) {
        const auto net = build_lattice(1, m, Metric::graph);
        const auto d = exit_time_diag(net, srw_kernel(net), net.origin(), net.interior_set(), {20000, 9});
        CHECK(d.exit_time_exact == doctest::Approx(double(m) * m).epsilon(1e-10));
        CHECK(d.green == doctest::Approx(m).epsilon(1e-10));
        CHECK(std::abs(d.ratio - std::log(double(m))) < 0.05 * std::log(double(m)));
        CHECK(d.ratio > 0);
    }
    const auto net = build_lattice(1, 5, Metric::graph);
    CHECK(kind_of([&] { exit_time_diag(net, srw_kernel(net), *net.find({4}), net.interior_set(), {100, 1}); }) ==
          ErrorKind::precondition);
}

TEST_CASE("asymptotic profile constants") {
    CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
    for (int d : {3, 4, 5}) {
        const auto ap = asymptotic_profile(d, 10, 0.5);
        // c_d / sigma equals the Z^d Green-function constant d Gamma(d/2 - 1) / (2 pi^{d/2}).
        const double green_const = d * std::tgamma(d / 2.0 - 1.0) / (2.0 * std::pow(std::numbers::pi, d / 2.0));
        CHECK(ap.c_d / ap.sigma == doctest::Approx(green_const).epsilon(1e-12));
        CHECK(ap.at(10) == 0.0);
        for (int k = 1; k < 10; ++k) CHECK(ap.at(k) > ap.at(k + 1));
    }
    CHECK(kind_of([] { asymptotic_profile(2, 10, 0.5); }) == ErrorKind::unsupported);
}

TEST_CASE("3-D hitting profile follows q_k within O(k^{1-d})") {
    const int m = 12;
    const auto net = build_lattice(3, m, Metric::euclidean);
    const auto k = srw_kernel(net);
    const double sigma = estimate_sigma(3, m);
    CHECK(sigma > 0.3);
    CHECK(sigma < 0.7);
    const auto hp = hitting_profile(net, k, net.interior_set(), net.origin());
    const auto ap = asymptotic_profile(3, m, sigma);
    const auto shells = compare(ap, net, hp);
    double worst = 0.0;
    for (const auto& s : shells) {
        if (s.shell < 2 || s.shell > m - 2) continue;
        worst = std::max(worst, s.max_deviation * s.shell * s.shell);
    }
    MESSAGE("3-D shell constant: " << worst);
    CHECK(worst < 3.0);
}

TEST_CASE("Lambda_m / m^2 tracks 1/G_m(0,0) in 3-D") {
    for (int m : {10, 14}) {
        const auto net = build_lattice(3, m, Metric::euclidean);
        const auto k = srw_kernel(net);
        const auto s = criterion_series(Occupation(net.size()), net, k, {m}, net.origin(), Metric::euclidean);
        const double lhs = s.rows[0].lambda / (double(m) * m);
        const double rhs = 1.0 / s.rows[0].green_origin;
        MESSAGE("m = " << m << ": " << lhs << " vs " << rhs);
        CHECK(std::abs(lhs / rhs - 1.0) < 0.15);
    }
}

TEST_CASE("Carne-Varopoulos bound") {
    const auto net = build_lattice(1, 30, Metric::graph);
    const auto k = srw_kernel(net);
    const auto cv = carne_varopoulos_check(net, k, *net.find({4}), net.origin(), 10);
    CHECK(cv.distance == 4);
    CHECK(cv.probability > 0.0);
    CHECK(cv.respected());
    // Exact binomial: P[S_10 = 4] = C(10, 7) / 2^10.
    CHECK(cv.probability == doctest::Approx(120.0 / 1024.0).epsilon(1e-12));
    const auto far = carne_varopoulos_check(net, k, *net.find({12}), net.origin(), 10);
    CHECK(far.probability == 0.0);
    CHECK(far.respected());
    CHECK(kind_of([&] { carne_varopoulos_check(net, k, *net.find({3}), net.origin(), 40); }) ==
          ErrorKind::enlarge_window);
    CHECK(kind_of([&] { carne_varopoulos_check(net, k, net.origin(), net.origin(), 4); }) ==
          ErrorKind::invalid_parameter);
}
