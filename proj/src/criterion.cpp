#include "arwlab/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "arwlab/error.hpp"
#include "arwlab/rng.hpp"

namespace arwlab {

// ---------------------------------------------------------------- RegionSolver

struct RegionSolver::Impl {
    Eigen::SparseMatrix<double> matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

RegionSolver::RegionSolver(const Kernel& kernel, const VertexSet& region)
    : kernel_(&kernel), region_(region), index_(kernel.size(), -1), impl_(std::make_unique<Impl>()) {
    if (region_.empty()) throw Error(ErrorKind::invalid_parameter, "empty region");
    for (std::size_t i = 0; i < region_.ids.size(); ++i) {
        if (region_.ids[i] >= kernel.size()) throw Error(ErrorKind::unknown_vertex, "region vertex outside kernel");
        index_[region_.ids[i]] = static_cast<std::int64_t>(i);
    }
    const auto n = static_cast<Eigen::Index>(region_.size());
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < region_.ids.size(); ++i) {
        const auto row = static_cast<int>(i);
        triplets.emplace_back(row, row, 1.0);
        for (const auto& e : kernel.row(region_.ids[i])) {
            const auto j = index_[e.to];
            if (j >= 0) triplets.emplace_back(row, static_cast<int>(j), -e.p);
        }
    }
    impl_->matrix.resize(n, n);
    impl_->matrix.setFromTriplets(triplets.begin(), triplets.end());
    impl_->matrix.makeCompressed();
    impl_->lu.compute(impl_->matrix);
    if (impl_->lu.info() != Eigen::Success)
        throw Error(ErrorKind::solver, "region system is singular: the walk cannot leave some part of the region");
}

RegionSolver::~RegionSolver() = default;
RegionSolver::RegionSolver(RegionSolver&&) noexcept = default;
RegionSolver& RegionSolver::operator=(RegionSolver&&) noexcept = default;

std::vector<double> RegionSolver::solve(const std::vector<double>& rhs) const {
    const auto n = static_cast<Eigen::Index>(region_.size());
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) b[i] = rhs.at(region_.ids[static_cast<std::size_t>(i)]);
    Eigen::VectorXd u = impl_->lu.solve(b);
    Eigen::VectorXd r = b - impl_->matrix * u;
    u += impl_->lu.solve(r);
    if (!u.allFinite()) throw Error(ErrorKind::solver, "non-finite solution");
    std::vector<double> out(kernel_->size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) out[region_.ids[static_cast<std::size_t>(i)]] = u[i];
    return out;
}

std::vector<double> RegionSolver::green_column(VertexId y) const {
    if (y >= index_.size() || index_[y] < 0) throw Error(ErrorKind::invalid_parameter, "green column outside region");
    std::vector<double> rhs(kernel_->size(), 0.0);
    rhs[y] = 1.0;
    return solve(rhs);
}

std::vector<double> RegionSolver::exit_times() const { return solve(std::vector<double>(kernel_->size(), 1.0)); }

// ---------------------------------------------------------------- hitting probabilities

namespace {

// Region vertices from which target can be reached without leaving region.
std::vector<char> can_reach(const Kernel& kernel, const std::vector<char>& inside, VertexId target) {
    const std::size_t n = kernel.size();
    std::vector<std::vector<VertexId>> pred(n);
    for (VertexId x = 0; x < n; ++x) {
        if (!inside[x]) continue;
        for (const auto& e : kernel.row(x))
            if (e.p > 0.0 && inside[e.to]) pred[e.to].push_back(x);
    }
    std::vector<char> seen(n, 0);
    std::deque<VertexId> queue{target};
    seen[target] = 1;
    while (!queue.empty()) {
        const VertexId y = queue.front();
        queue.pop_front();
        for (VertexId x : pred[y]) {
            if (!seen[x]) {
                seen[x] = 1;
                queue.push_back(x);
            }
        }
    }
    return seen;
}

// Walks from start until target (true) or leaving region (false).
bool walk_hits(const Kernel& kernel, const std::vector<char>& inside, VertexId target, VertexId start,
               rng::Stream& s, std::uint64_t& budget) {
    VertexId pos = start;
    for (;;) {
        if (pos == target) return true;
        if (!inside[pos]) return false;
        if (budget == 0) throw Error(ErrorKind::solver, "Monte Carlo step cap exceeded");
        --budget;
        pos = kernel.sample(pos, s.uniform());
    }
}

void require_in(const VertexSet& region, VertexId v, const char* what) {
    if (!region.contains(v)) throw Error(ErrorKind::invalid_parameter, std::string(what) + " must lie in the region");
}

} // namespace

Estimate hitting_probability_mc(const Kernel& kernel, const VertexSet& region, VertexId target, VertexId start,
                                const MonteCarloOptions& mc) {
    require_in(region, target, "target");
    require_in(region, start, "start");
    if (mc.walks == 0) throw Error(ErrorKind::invalid_parameter, "Monte Carlo needs at least one walk");
    const auto inside = region.mask(kernel.size());
    std::uint64_t budget = mc.step_cap;
    std::uint64_t hits = 0;
    for (std::uint64_t w = 0; w < mc.walks; ++w) {
        rng::Stream s(mc.seed, rng::Tag::monte_carlo, {start, w});
        if (walk_hits(kernel, inside, target, start, s, budget)) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(mc.walks);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(mc.walks)), mc.walks};
}

HittingProfile hitting_profile(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId target,
                               SolveMethod method, const MonteCarloOptions& mc) {
    require_in(region, target, "target");
    if (kernel.size() != net.size()) throw Error(ErrorKind::invalid_parameter, "kernel size differs from network");
    HittingProfile hp;
    hp.region = region;
    hp.target = target;
    hp.method = method;
    hp.p.assign(net.size(), 0.0);

    if (method == SolveMethod::monte_carlo) {
        hp.std_error.assign(net.size(), 0.0);
        for (VertexId x : region.ids) {
            MonteCarloOptions opt = mc;
            auto est = hitting_probability_mc(kernel, region, target, x, opt);
            hp.p[x] = est.mean;
            hp.std_error[x] = est.std_error;
        }
        return hp;
    }

    const auto inside = region.mask(net.size());
    const auto reach = can_reach(kernel, inside, target);
    std::vector<VertexId> unknowns;
    for (VertexId x : region.ids)
        if (x != target && reach[x]) unknowns.push_back(x);
    hp.p[target] = 1.0;
    if (!unknowns.empty()) {
        RegionSolver solver(kernel, VertexSet(unknowns));
        std::vector<double> rhs(net.size(), 0.0);
        for (VertexId x : unknowns) rhs[x] = kernel.probability(x, target);
        auto u = solver.solve(rhs);
        for (VertexId x : unknowns) hp.p[x] = std::clamp(u[x], 0.0, 1.0);
    }
    hp.residual = harmonic_residual(kernel, hp);
    return hp;
}

double harmonic_residual(const Kernel& kernel, const HittingProfile& profile) {
    double worst = 0.0;
    for (VertexId x : profile.region.ids) {
        if (x == profile.target) continue;
        double acc = 0.0;
        for (const auto& e : kernel.row(x))
            if (profile.region.contains(e.to)) acc += e.p * profile.p[e.to];
        worst = std::max(worst, std::abs(profile.p[x] - acc));
    }
    return worst;
}

double greens(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId x, VertexId y) {
    require_in(region, x, "x");
    require_in(region, y, "y");
    if (kernel.size() != net.size()) throw Error(ErrorKind::invalid_parameter, "kernel size differs from network");
    return RegionSolver(kernel, region).green_column(y)[x];
}

Estimate greens_mc(const Kernel& kernel, const VertexSet& region, VertexId x, VertexId y, const MonteCarloOptions& mc) {
    require_in(region, x, "x");
    require_in(region, y, "y");
    if (mc.walks == 0) throw Error(ErrorKind::invalid_parameter, "Monte Carlo needs at least one walk");
    const auto inside = region.mask(kernel.size());
    std::uint64_t budget = mc.step_cap;
    double sum = 0.0, sum2 = 0.0;
    for (std::uint64_t w = 0; w < mc.walks; ++w) {
        rng::Stream s(mc.seed, rng::Tag::monte_carlo, {x, y, w});
        double count = 0.0;
        for (VertexId pos = x; inside[pos]; pos = kernel.sample(pos, s.uniform())) {
            if (budget == 0) throw Error(ErrorKind::solver, "Monte Carlo step cap exceeded");
            --budget;
            if (pos == y) count += 1.0;
        }
        sum += count;
        sum2 += count * count;
    }
    const double n = static_cast<double>(mc.walks);
    const double mean = sum / n;
    const double var = n > 1 ? (sum2 - n * mean * mean) / (n - 1) : 0.0;
    return {mean, std::sqrt(std::max(var, 0.0) / n), mc.walks};
}

double reversibility_check(const Network& net, const Kernel& kernel, const VertexSet& region, VertexId x,
                           VertexId target) {
    if (!kernel.reversible_srw())
        throw Error(ErrorKind::unsupported, "reversibility check needs a simple-random-walk kernel");
    require_in(region, x, "x");
    require_in(region, target, "target");
    RegionSolver solver(kernel, region);
    const auto to_target = solver.green_column(target); // G(., target)
    const auto to_x = solver.green_column(x);           // G(., x)
    return std::abs(to_target[x] * net.weight(x) - to_x[target] * net.weight(target));
}

// ---------------------------------------------------------------- criterion series

CriterionVerdict criterion_verdict(const std::vector<CriterionRow>& rows) {
    CriterionVerdict v;
    std::vector<std::pair<double, double>> pts;
    bool all_positive = !rows.empty();
    for (const auto& r : rows) {
        if (r.ratio > 0.0) pts.emplace_back(std::log(static_cast<double>(r.m)), std::log(r.ratio));
        else all_positive = false;
    }
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double k = static_cast<double>(pts.size());
        const double den = k * sxx - sx * sx;
        if (den > 0.0) v.growth_exponent = (k * sxy - sx * sy) / den;
    }
    v.trend_positive = all_positive && v.growth_exponent && *v.growth_exponent > trend_exponent_threshold;
    v.label = v.trend_positive ? "evidence: criterion trend positive" : "evidence: no positive criterion trend";
    return v;
}

CriterionSeries criterion_series(const Occupation& occ, const Network& net, const Kernel& kernel,
                                 const std::vector<int>& schedule, VertexId target, Metric metric) {
    if (schedule.empty()) throw Error(ErrorKind::invalid_parameter, "empty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i] < 1) throw Error(ErrorKind::invalid_parameter, "schedule radii must be >= 1");
        if (i && schedule[i] <= schedule[i - 1])
            throw Error(ErrorKind::invalid_parameter, "schedule must be strictly increasing");
    }
    if (occ.size() != net.size()) throw Error(ErrorKind::invalid_parameter, "occupation size differs from network");
    net.check_vertex(target);

    CriterionSeries series;
    series.target = target;
    for (int m : schedule) {
        const auto region = metric_ball(net, target, m, metric);
        for (VertexId x : region.ids)
            if (!net.interior(x))
                throw Error(ErrorKind::invalid_parameter,
                            "region of radius " + std::to_string(m) + " leaves the network interior");
        const auto hp = hitting_profile(net, kernel, region, target);
        RegionSolver solver(kernel, region);
        const auto g = solver.green_column(target);
        const auto tau = solver.exit_times();

        CriterionRow row;
        row.m = m;
        row.region_size = region.size();
        for (VertexId x : region.ids) {
            row.lambda += hp.p[x];
            row.omega += occ[x] * hp.p[x];
        }
        row.delta = row.omega - row.lambda;
        row.ratio = row.delta / std::sqrt(row.lambda);
        row.green_origin = g[target];
        row.exit_time = tau[target];
        row.residual = hp.residual;
        series.rows.push_back(row);
    }
    series.verdict = criterion_verdict(series.rows);
    return series;
}

// ---------------------------------------------------------------- exit-time and heat-kernel diagnostics

ExitTimeDiag exit_time_diag(const Network& net, const Kernel& kernel, VertexId x, const VertexSet& region,
                            const MonteCarloOptions& mc) {
    require_in(region, x, "start");
    for (const auto& nb : net.neighbors(x))
        if (!region.contains(nb.to))
            throw Error(ErrorKind::precondition, "the radius-2 ball around the start must avoid the exit set");
    if (mc.walks < 2) throw Error(ErrorKind::invalid_parameter, "exit-time diagnostic needs at least two walks");

    RegionSolver solver(kernel, region);
    ExitTimeDiag diag;
    diag.start = x;
    diag.region_size = region.size();
    diag.green = solver.green_column(x)[x];
    diag.exit_time_exact = solver.exit_times()[x];
    if (!(diag.green > 1.0)) throw Error(ErrorKind::precondition, "G_Z must exceed 1 for the diagnostic");

    const auto inside = region.mask(net.size());
    std::uint64_t budget = mc.step_cap;
    double sum = 0.0, sum2 = 0.0;
    for (std::uint64_t w = 0; w < mc.walks; ++w) {
        rng::Stream s(mc.seed, rng::Tag::monte_carlo, {x, w, 0x7A75ULL});
        double t = 0.0;
        for (VertexId pos = x; inside[pos]; pos = kernel.sample(pos, s.uniform())) {
            if (budget == 0) throw Error(ErrorKind::solver, "Monte Carlo step cap exceeded");
            --budget;
            t += 1.0;
        }
        sum += t;
        sum2 += t * t;
    }
    const double n = static_cast<double>(mc.walks);
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1);
    diag.exit_time = {mean, std::sqrt(std::max(var, 0.0) / n), mc.walks};
    const double scale = std::log(diag.green) / (diag.green * diag.green);
    diag.ratio = mean * scale;
    diag.ratio_std_error = diag.exit_time.std_error * scale;
    return diag;
}

double unit_ball_volume(int d) {
    if (d < 1) throw Error(ErrorKind::invalid_parameter, "dimension must be >= 1");
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

AsymptoticProfile asymptotic_profile(int d, int m, double sigma) {
    if (d < 3) throw Error(ErrorKind::unsupported, "asymptotic profile needs d >= 3");
    if (m < 1) throw Error(ErrorKind::invalid_parameter, "radius must be >= 1");
    if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_parameter, "escape probability must be positive");
    AsymptoticProfile ap;
    ap.d = d;
    ap.m = m;
    ap.sigma = sigma;
    ap.omega_d = unit_ball_volume(d);
    ap.c_d = 2.0 / (d - 2) * sigma / ap.omega_d;
    ap.q.assign(static_cast<std::size_t>(m) + 1, 0.0);
    const double tail = std::pow(static_cast<double>(m), 2.0 - d);
    for (int k = 1; k <= m; ++k) ap.q[static_cast<std::size_t>(k)] = ap.c_d * (std::pow(double(k), 2.0 - d) - tail);
    return ap;
}

double estimate_sigma(int d, int m) {
    const auto net = build_lattice(d, m, Metric::euclidean);
    const auto kernel = srw_kernel(net);
    return 1.0 / greens(net, kernel, net.interior_set(), net.origin(), net.origin());
}

namespace {

int shell_of(std::span<const int> x) {
    long s = 0;
    for (int c : x) s += static_cast<long>(c) * c;
    long r = static_cast<long>(std::sqrt(static_cast<double>(s)));
    while (r * r > s) --r;
    while ((r + 1) * (r + 1) <= s) ++r;
    return static_cast<int>(r) + 1;
}

} // namespace

std::vector<ShellDeviation> compare(const AsymptoticProfile& profile, const Network& net,
                                    const HittingProfile& hitting) {
    if (!net.embedded()) throw Error(ErrorKind::unsupported, "shell comparison needs a lattice");
    std::vector<ShellDeviation> shells(static_cast<std::size_t>(profile.m) + 1);
    for (int k = 0; k <= profile.m; ++k) shells[static_cast<std::size_t>(k)].shell = k;
    const auto origin = net.coords(hitting.target);
    std::vector<int> diff(origin.size());
    for (VertexId v : hitting.region.ids) {
        auto c = net.coords(v);
        for (std::size_t i = 0; i < c.size(); ++i) diff[i] = c[i] - origin[i];
        const int k = shell_of(diff);
        if (k > profile.m) continue;
        auto& s = shells[static_cast<std::size_t>(k)];
        s.max_deviation = std::max(s.max_deviation, std::abs(hitting.p[v] - profile.at(k)));
        ++s.count;
    }
    std::erase_if(shells, [](const ShellDeviation& s) { return s.count == 0; });
    return shells;
}

CarneVaropoulos carne_varopoulos_check(const Network& net, const Kernel& kernel, VertexId x, VertexId y, int t) {
    net.check_vertex(x);
    net.check_vertex(y);
    if (t < 1) throw Error(ErrorKind::invalid_parameter, "steps must be >= 1");
    const int r = net.distances_from(y)[x];
    if (r < 1) throw Error(ErrorKind::invalid_parameter, "x and y must be distinct");

    std::vector<double> dist(net.size(), 0.0), next(net.size(), 0.0);
    dist[y] = 1.0;
    for (int s = 0; s < t; ++s) {
        std::fill(next.begin(), next.end(), 0.0);
        for (VertexId v = 0; v < net.size(); ++v) {
            if (dist[v] == 0.0) continue;
            if (!net.interior(v))
                throw Error(ErrorKind::enlarge_window, "the walk reaches the window boundary within t steps");
            for (const auto& e : kernel.row(v)) next[e.to] += dist[v] * e.p;
        }
        dist.swap(next);
    }
    CarneVaropoulos cv;
    cv.distance = r;
    cv.steps = t;
    cv.probability = dist[x];
    const double decay = std::exp(-static_cast<double>(r) * r / (2.0 * t));
    cv.bound = 2.0 * std::sqrt(net.weight(y) / net.weight(x)) * decay;
    cv.standard_bound = 2.0 * std::sqrt(net.weight(x) / net.weight(y)) * decay;
    return cv;
}

} // namespace arwlab
