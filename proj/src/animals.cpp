#include "arwlab/animals.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>

#include "arwlab/csv.hpp"
#include "arwlab/error.hpp"

namespace arwlab {

std::string_view to_string(AnimalMethod m) {
    switch (m) {
    case AnimalMethod::exact_path: return "exact-path";
    case AnimalMethod::exact_enumeration: return "exact-enumeration";
    case AnimalMethod::heuristic: return "heuristic";
    }
    return "?";
}

namespace {

std::uint64_t weight_of(const Occupation& occ, const std::vector<VertexId>& set) {
    std::uint64_t w = 0;
    for (VertexId v : set) w += occ[v];
    return w;
}

bool connected(const Network& net, const std::vector<VertexId>& set) {
    if (set.empty()) return true;
    std::vector<char> in(net.size(), 0), seen(net.size(), 0);
    for (VertexId v : set) in[v] = 1;
    std::deque<VertexId> q{set.front()};
    seen[set.front()] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const VertexId x = q.front();
        q.pop_front();
        for (const auto& nb : net.neighbors(x)) {
            if (in[nb.to] && !seen[nb.to]) {
                seen[nb.to] = 1;
                ++reached;
                q.push_back(nb.to);
            }
        }
    }
    return reached == set.size();
}

// 1-D windows are paths of consecutive coordinates, so connected sets
// through the origin are intervals.
Animal path_animal(const Occupation& occ, const Network& net, VertexId origin, std::size_t n) {
    int lo = net.coords(0)[0], hi = lo;
    for (VertexId v = 1; v < net.size(); ++v) {
        lo = std::min(lo, net.coords(v)[0]);
        hi = std::max(hi, net.coords(v)[0]);
    }
    const auto len = static_cast<std::size_t>(hi - lo + 1);
    std::vector<VertexId> at(len);
    std::vector<std::uint64_t> prefix(len + 1, 0);
    for (std::size_t i = 0; i < len; ++i) {
        at[i] = *net.find({lo + static_cast<int>(i)});
        prefix[i + 1] = prefix[i] + occ[at[i]];
    }
    const auto o = static_cast<std::size_t>(net.coords(origin)[0] - lo);
    const std::size_t first = o + 1 >= n ? o + 1 - n : 0;
    const std::size_t last = std::min(o, len - n);
    Animal best;
    best.method = AnimalMethod::exact_path;
    std::size_t best_start = first;
    for (std::size_t s = first; s <= last; ++s) {
        const std::uint64_t w = prefix[s + n] - prefix[s];
        if (s == first || w > best.weight) {
            best.weight = w;
            best_start = s;
        }
    }
    best.witness = VertexSet(std::vector<VertexId>(at.begin() + static_cast<std::ptrdiff_t>(best_start),
                                                   at.begin() + static_cast<std::ptrdiff_t>(best_start + n)));
    return best;
}

// Greedy growth by heaviest frontier vertex, then single-vertex swaps that
// keep the set connected and strictly raise the weight.
Animal greedy_animal(const Occupation& occ, const Network& net, VertexId origin, std::size_t n,
                     std::vector<VertexId> start = {}) {
    std::vector<char> in(net.size(), 0);
    std::vector<VertexId> set = start.empty() ? std::vector<VertexId>{origin} : std::move(start);
    for (VertexId v : set) in[v] = 1;

    auto best_frontier = [&]() -> std::optional<VertexId> {
        std::optional<VertexId> best;
        for (VertexId x : set) {
            for (const auto& nb : net.neighbors(x)) {
                if (in[nb.to]) continue;
                if (!best || occ[nb.to] > occ[*best] || (occ[nb.to] == occ[*best] && nb.to < *best)) best = nb.to;
            }
        }
        return best;
    };

    while (set.size() < n) {
        const auto v = best_frontier();
        set.push_back(*v);
        in[*v] = 1;
    }

    for (std::size_t pass = 0; pass < 4 * n; ++pass) {
        bool improved = false;
        std::vector<VertexId> by_weight = set;
        std::sort(by_weight.begin(), by_weight.end(), [&](VertexId a, VertexId b) { return occ[a] < occ[b]; });
        for (VertexId u : by_weight) {
            if (u == origin) continue;
            std::vector<VertexId> frontier;
            for (VertexId x : set)
                for (const auto& nb : net.neighbors(x))
                    if (!in[nb.to] && occ[nb.to] > occ[u]) frontier.push_back(nb.to);
            std::sort(frontier.begin(), frontier.end(), [&](VertexId a, VertexId b) {
                return occ[a] != occ[b] ? occ[a] > occ[b] : a < b;
            });
            frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
            for (VertexId w : frontier) {
                auto trial = set;
                *std::find(trial.begin(), trial.end(), u) = w;
                if (!connected(net, trial)) continue;
                in[u] = 0;
                in[w] = 1;
                set = std::move(trial);
                improved = true;
                break;
            }
            if (improved) break;
        }
        if (!improved) break;
    }
    return {weight_of(occ, set), VertexSet(set), AnimalMethod::heuristic};
}

// Enumerates every connected set containing the origin exactly once by
// include/exclude branching on the candidate frontier.
class Enumerator {
public:
    Enumerator(const Occupation& occ, const Network& net, VertexId origin, std::size_t n, std::uint64_t budget,
               Animal seed)
        : occ_(occ), net_(net), n_(n), budget_(budget), best_(std::move(seed)), in_s_(net.size(), 0),
          in_f_(net.size(), 0), in_c_(net.size(), 0), dist_(net.distances_from(origin)) {
        for (VertexId v = 0; v < net.size(); ++v)
            if (dist_[v] >= 0 && static_cast<std::size_t>(dist_[v]) < n && occ[v] > 0) heavy_.push_back(v);
        std::sort(heavy_.begin(), heavy_.end(), [&](VertexId a, VertexId b) { return occ[a] > occ[b]; });
        s_.push_back(origin);
        in_s_[origin] = 1;
        weight_ = occ[origin];
        push_neighbors(origin);
    }

    // False when the node budget ran out.
    bool run() {
        recurse();
        return !exhausted_;
    }
    Animal best() const { return best_; }

private:
    std::size_t push_neighbors(VertexId v) {
        std::size_t added = 0;
        for (const auto& nb : net_.neighbors(v)) {
            const VertexId w = nb.to;
            if (in_s_[w] || in_f_[w] || in_c_[w]) continue;
            if (static_cast<std::size_t>(dist_[w]) >= n_) continue;
            in_c_[w] = 1;
            c_.push_back(w);
            ++added;
        }
        return added;
    }

    std::uint64_t optimistic(std::size_t k) const {
        std::uint64_t w = 0;
        for (VertexId v : heavy_) {
            if (k == 0) break;
            if (in_s_[v] || in_f_[v]) continue;
            w += occ_[v];
            --k;
        }
        return w;
    }

    void recurse() {
        if (exhausted_) return;
        if (++nodes_ > budget_) {
            exhausted_ = true;
            return;
        }
        if (s_.size() == n_) {
            if (weight_ > best_.weight || best_.witness.size() != n_) {
                best_.weight = weight_;
                best_.witness = VertexSet(s_);
            }
            return;
        }
        if (c_.empty()) return;
        if (best_.witness.size() == n_ && weight_ + optimistic(n_ - s_.size()) <= best_.weight) return;

        // Branch on the heaviest candidate. The list order is restored on
        // exit because callers undo their pushes by popping from the back.
        const auto pick = static_cast<std::size_t>(
            std::max_element(c_.begin(), c_.end(), [&](VertexId a, VertexId b) { return occ_[a] < occ_[b]; }) -
            c_.begin());
        std::swap(c_[pick], c_.back());
        const VertexId v = c_.back();
        c_.pop_back();
        in_c_[v] = 0;

        s_.push_back(v);
        in_s_[v] = 1;
        weight_ += occ_[v];
        const std::size_t added = push_neighbors(v);
        recurse();
        for (std::size_t i = 0; i < added; ++i) {
            in_c_[c_.back()] = 0;
            c_.pop_back();
        }
        weight_ -= occ_[v];
        in_s_[v] = 0;
        s_.pop_back();

        in_f_[v] = 1;
        recurse();
        in_f_[v] = 0;

        c_.push_back(v);
        in_c_[v] = 1;
        std::swap(c_[pick], c_.back());
    }

    const Occupation& occ_;
    const Network& net_;
    std::size_t n_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    bool exhausted_ = false;
    Animal best_;
    std::vector<char> in_s_, in_f_, in_c_;
    const std::vector<int>& dist_;
    std::vector<VertexId> heavy_;
    std::vector<VertexId> s_, c_;
    std::uint64_t weight_ = 0;
};

void check_args(const Occupation& occ, const Network& net, VertexId origin, std::size_t n) {
    net.check_vertex(origin);
    if (occ.size() != net.size()) throw Error(ErrorKind::invalid_parameter, "occupation size differs from network");
    if (n < 1) throw Error(ErrorKind::invalid_parameter, "animal size must be >= 1");
    if (n > net.size())
        throw Error(ErrorKind::invalid_parameter,
                    "animal size " + std::to_string(n) + " exceeds the window (" + std::to_string(net.size()) + ")");
}

} // namespace

Animal max_weight_animal(const Occupation& occ, const Network& net, VertexId origin, std::size_t n,
                         const AnimalOptions& opt) {
    check_args(occ, net, origin, n);
    if (net.embedded() && net.dimension() == 1) return path_animal(occ, net, origin, n);
    Animal greedy = greedy_animal(occ, net, origin, n);
    if (n > opt.exact_cap) return greedy;
    Enumerator e(occ, net, origin, n, opt.node_budget, greedy);
    const bool complete = e.run();
    Animal best = e.best();
    best.method = complete ? AnimalMethod::exact_enumeration : AnimalMethod::heuristic;
    return best;
}

AnimalReport threshold_A(const Occupation& occ, const Network& net, VertexId origin, std::size_t n_max,
                         const AnimalOptions& opt) {
    if (n_max < 1) throw Error(ErrorKind::invalid_parameter, "n_max must be >= 1");
    check_args(occ, net, origin, n_max);
    AnimalReport r;
    r.origin = origin;
    r.n_max = n_max;
    r.W.assign(n_max + 1, 0);
    r.method.assign(n_max + 1, AnimalMethod::exact_enumeration);
    r.witness.assign(n_max + 1, VertexSet{});
    for (std::size_t n = 1; n <= n_max; ++n) {
        Animal a = max_weight_animal(occ, net, origin, n, opt);
        if (a.method == AnimalMethod::heuristic && n > 1 && a.weight < r.W[n - 1]) {
            // Growing the previous witness keeps the table monotone.
            Animal grown = greedy_animal(occ, net, origin, n, r.witness[n - 1].ids);
            if (grown.weight > a.weight) a = std::move(grown);
        }
        r.W[n] = a.weight;
        r.method[n] = a.method;
        r.witness[n] = std::move(a.witness);
    }
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (r.W[n] >= n) r.threshold = n;
        r.density_max = std::max(r.density_max, static_cast<double>(r.W[n]) / static_cast<double>(n));
    }
    r.unbounded = r.W[n_max] >= n_max;
    for (std::size_t n = r.threshold + 1; n <= n_max; ++n)
        if (r.method[n] == AnimalMethod::heuristic) r.lower_bound_only = true;

    const std::size_t from = n_max / 2 + 1;
    if (n_max - from + 1 >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
        for (std::size_t n = from; n <= n_max; ++n) {
            const double x = static_cast<double>(n), y = static_cast<double>(r.W[n]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            k += 1;
        }
        r.tail_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
    return r;
}

bool containment_check(const ArwRunResult& result, const AnimalReport& report) {
    if (!std::isinf(result.sleep_rate) || !result.nearest_neighbor)
        throw Error(ErrorKind::precondition, "containment needs lambda = infinity and nearest-neighbor moves");
    if (result.origin != report.origin) throw Error(ErrorKind::precondition, "report and run use different origins");
    const std::size_t size = result.origin_component.size();
    if (size <= report.threshold) return true;
    if (report.unbounded || report.lower_bound_only)
        throw Error(ErrorKind::precondition, "animal report cannot decide a component of size " + std::to_string(size));
    return false;
}

double tail_condition(const Pmf& pmf, int d) {
    if (d < 2) throw Error(ErrorKind::invalid_parameter, "tail condition needs d >= 2");
    constexpr std::uint64_t term_cap = 10'000'000;
    const double inv = 1.0 / d;
    double sum = 0.0;
    for (std::uint64_t n = 0; n < term_cap; ++n) {
        const double tail = pmf.tail(n);
        const double term = tail > 0.0 ? std::pow(tail, inv) : 0.0;
        if (term < 1e-15) return sum;
        sum += term;
    }
    return std::numeric_limits<double>::infinity();
}

nlohmann::json to_json(const AnimalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t n = 1; n <= report.n_max; ++n)
        rows.push_back({{"n", n},
                        {"W", report.W[n]},
                        {"method", to_string(report.method[n])},
                        {"witness", report.witness[n].ids}});
    nlohmann::json j{{"origin", report.origin},
                     {"n_max", report.n_max},
                     {"table", rows},
                     {"threshold", report.threshold},
                     {"threshold_exceeds_n_max", report.unbounded},
                     {"threshold_lower_bound_only", report.lower_bound_only},
                     {"density_max", report.density_max}};
    j["tail_slope"] = report.tail_slope ? nlohmann::json(*report.tail_slope) : nlohmann::json(nullptr);
    return j;
}

void write_animal_csv(std::ostream& os, const AnimalReport& report) {
    csv::write_row(os, {"n", "W", "method"});
    for (std::size_t n = 1; n <= report.n_max; ++n)
        csv::write_row(os, {std::to_string(n), std::to_string(report.W[n]), std::string(to_string(report.method[n]))});
}

} // namespace arwlab
