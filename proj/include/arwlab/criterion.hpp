#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"

namespace arwlab {

/// Walk confined to a region: factorization of (I - P) restricted to the
/// region, reused across right-hand sides.
class RegionSolver {
public:
    RegionSolver(const Kernel& kernel, const VertexSet& region);
    ~RegionSolver();
    RegionSolver(RegionSolver&&) noexcept;
    RegionSolver& operator=(RegionSolver&&) noexcept;

    /// G(., y): expected visits to y before leaving the region, per start
    /// vertex. Zero outside the region.
    std::vector<double> green_column(VertexId y) const;
    /// E_x[tau] for every x (zero outside the region).
    std::vector<double> exit_times() const;

    /// Solves (I - P_region) u = b with b indexed by vertex id (entries
    /// outside the region are ignored); one step of iterative refinement.
    std::vector<double> solve(const std::vector<double>& rhs) const;

    const VertexSet& region() const noexcept { return region_; }

private:
    const Kernel* kernel_;
    VertexSet region_;
    std::vector<std::int64_t> index_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

enum class SolveMethod { linear_solve, monte_carlo };

struct MonteCarloOptions {
    std::uint64_t walks = 10'000;
    std::uint64_t seed = 0;
    std::uint64_t step_cap = 100'000'000;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

/// p_x = P_x[walk hits target before leaving region].
struct HittingProfile {
    VertexSet region;
    VertexId target = 0;
    /// Indexed by vertex id; zero outside the region.
    std::vector<double> p;
    /// Monte Carlo standard errors (empty for linear solves).
    std::vector<double> std_error;
    SolveMethod method = SolveMethod::linear_solve;
    /// Max harmonicity residual (linear solve).
    double residual = 0.0;
};

HittingProfile hitting_profile(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId target,
                               SolveMethod method = SolveMethod::linear_solve, const MonteCarloOptions& mc = {});

/// Monte Carlo estimate of p_x for a single start vertex.
Estimate hitting_probability_mc(const Kernel& kernel, const VertexSet& region, VertexId target, VertexId start,
                                const MonteCarloOptions& mc);

/// max over interior non-target x of |p_x - sum_y P(x, y) p_y|.
double harmonic_residual(const Kernel& kernel, const HittingProfile& profile);

/// G_region(x, y) by linear solve.
double greens(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId x, VertexId y);

/// G(x, y) by simulating walks from x and counting visits to y.
Estimate greens_mc(const Kernel& kernel, const VertexSet& region, VertexId x, VertexId y, const MonteCarloOptions& mc);

/// |G(x, t) pi(x) - G(t, x) pi(t)|.
double reversibility_check(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId x,
                           VertexId target);

struct CriterionRow {
    int m = 0;
    std::size_t region_size = 0;
    double lambda = 0.0; // sum of p_x
    double omega = 0.0;  // sum of eta(x) p_x
    double delta = 0.0;  // omega - lambda
    double ratio = 0.0;  // delta / sqrt(lambda)
    double green_origin = 0.0;
    double exit_time = 0.0;
    double residual = 0.0;
};

/// Finite evidence only: the limit in the criterion is not decidable from a
/// finite schedule.
struct CriterionVerdict {
    std::optional<double> growth_exponent; // slope of log ratio vs log m
    bool trend_positive = false;           // exponent > 0.25, all ratios > 0
    std::string label;
};

inline constexpr double trend_exponent_threshold = 0.25;

struct CriterionSeries {
    VertexId target = 0;
    std::vector<CriterionRow> rows;
    CriterionVerdict verdict;
};

/// Exact Lambda_m, Omega_m, Delta_m for each m in the (strictly increasing)
/// schedule, with A_m the metric ball of radius m around target.
CriterionSeries criterion_series(const Occupation& occ, const Network& net, const Kernel& kernel,
                                 const std::vector<int>& schedule, VertexId target, Metric metric);

CriterionVerdict criterion_verdict(const std::vector<CriterionRow>& rows);

struct ExitTimeDiag {
    VertexId start = 0;
    std::size_t region_size = 0;
    Estimate exit_time;       // Monte Carlo E_x[tau]
    double exit_time_exact = 0.0;
    double green = 0.0;       // G_Z at x
    double ratio = 0.0;       // E[tau] log G / G^2
    double ratio_std_error = 0.0;
};

/// Requires x and its neighbors inside region and G_Z(x) > 1.
ExitTimeDiag exit_time_diag(const Network& net, const Kernel& kernel, VertexId x, const VertexSet& region,
                            const MonteCarloOptions& mc);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

struct AsymptoticProfile {
    int d = 0;
    int m = 0;
    double sigma = 0.0;
    double omega_d = 0.0;
    double c_d = 0.0;
    /// q[k] for k = 0..m, q[0] unused.
    std::vector<double> q;

    double at(int k) const { return q.at(static_cast<std::size_t>(k)); }
};

/// q_k = c_d (k^{2-d} - m^{2-d}), c_d = 2 sigma / ((d - 2) omega_d). d >= 3.
AsymptoticProfile asymptotic_profile(int d, int m, double sigma);

/// 1 / G_m(0, 0) on the Euclidean ball of radius m in Z^d.
double estimate_sigma(int d, int m);

struct ShellDeviation {
    int shell = 0; // smallest integer strictly greater than |x|
    double max_deviation = 0.0;
    std::size_t count = 0;
};

/// max |p_x - q_shell(x)| grouped by shell.
std::vector<ShellDeviation> compare(const AsymptoticProfile& profile, const Network& net,
                                    const HittingProfile& hitting);

struct CarneVaropoulos {
    int distance = 0;
    int steps = 0;
    double probability = 0.0; // P[X(t) = x | X(0) = y]
    double bound = 0.0;       // 2 sqrt(pi(y) / pi(x)) exp(-r^2 / 2t)
    /// Varopoulos's orientation, 2 sqrt(pi(x) / pi(y)) exp(-r^2 / 2t); equal
    /// to bound when pi(x) = pi(y).
    double standard_bound = 0.0;
    bool respected() const { return probability <= bound; }
};

CarneVaropoulos carne_varopoulos_check(const Network& net, const Kernel& kernel, VertexId x, VertexId y, int t);

} // namespace arwlab
