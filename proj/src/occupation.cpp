#include "arwlab/occupation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "arwlab/csv.hpp"
#include "arwlab/error.hpp"
#include "arwlab/rng.hpp"

namespace arwlab {

// ---------------------------------------------------------------- Pmf

Pmf Pmf::dirac(std::uint32_t k) {
    std::vector<double> t(k + 1, 0.0);
    t[k] = 1.0;
    Pmf p = table(std::move(t));
    p.name_ = "dirac";
    return p;
}

Pmf Pmf::bernoulli(double prob) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw Error(ErrorKind::distribution, "bernoulli parameter outside [0, 1]");
    Pmf p = table({1.0 - prob, prob});
    p.name_ = "bernoulli";
    return p;
}

Pmf Pmf::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean) || mean > 500.0)
        throw Error(ErrorKind::distribution, "poisson mean must lie in [0, 500]");
    Pmf p;
    p.name_ = "poisson";
    p.poisson_mean_ = mean;
    p.mean_ = mean;
    p.variance_ = mean;
    return p;
}

Pmf Pmf::table(std::vector<double> masses) {
    if (masses.empty()) throw Error(ErrorKind::distribution, "empty pmf table");
    double sum = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw Error(ErrorKind::distribution, "pmf masses must be nonnegative");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::distribution, "pmf masses do not sum to 1");
    Pmf p;
    p.name_ = "table";
    p.table_ = std::move(masses);
    p.finish_moments();
    return p;
}

void Pmf::finish_moments() {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < table_.size(); ++k) {
        m1 += static_cast<double>(k) * table_[k];
        m2 += static_cast<double>(k) * static_cast<double>(k) * table_[k];
    }
    mean_ = m1;
    variance_ = m2 - m1 * m1;
}

double Pmf::mass(std::uint64_t k) const {
    if (poisson_mean_) {
        const double mu = *poisson_mean_;
        if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
        return std::exp(-mu + static_cast<double>(k) * std::log(mu) - std::lgamma(static_cast<double>(k) + 1.0));
    }
    return k < table_.size() ? table_[k] : 0.0;
}

double Pmf::tail(std::uint64_t n) const {
    if (poisson_mean_) {
        const double mu = *poisson_mean_;
        double term = mass(n + 1);
        double sum = 0.0;
        for (std::uint64_t k = n + 1; term > 0.0; ++k) {
            sum += term;
            if (static_cast<double>(k) > mu && term < sum * 1e-18) break;
            term *= mu / static_cast<double>(k + 1);
        }
        return sum;
    }
    double sum = 0.0;
    for (std::size_t k = n + 1; k < table_.size(); ++k) sum += table_[k];
    return sum;
}

std::uint32_t Pmf::sample(double u) const {
    if (poisson_mean_) {
        const double mu = *poisson_mean_;
        std::uint32_t k = 0;
        double p = std::exp(-mu);
        double cdf = p;
        while (u >= cdf) {
            ++k;
            p *= mu / k;
            if (p == 0.0 && static_cast<double>(k) > mu) break;
            cdf += p;
        }
        return k;
    }
    double cdf = 0.0;
    for (std::size_t k = 0; k < table_.size(); ++k) {
        cdf += table_[k];
        if (u < cdf) return static_cast<std::uint32_t>(k);
    }
    // u landed in the rounding slack above the last cumulative mass.
    for (std::size_t k = table_.size(); k-- > 0;)
        if (table_[k] > 0.0) return static_cast<std::uint32_t>(k);
    return 0;
}

nlohmann::json Pmf::to_json() const {
    if (poisson_mean_) return {{"type", "poisson"}, {"mean", *poisson_mean_}};
    if (name_ == "dirac") return {{"type", "dirac"}, {"value", table_.size() - 1}};
    if (name_ == "bernoulli") return {{"type", "bernoulli"}, {"p", table_[1]}};
    return {{"type", "table"}, {"masses", table_}};
}

Pmf Pmf::from_json(const nlohmann::json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "poisson") return poisson(j.at("mean").get<double>());
        if (type == "dirac") return dirac(j.at("value").get<std::uint32_t>());
        if (type == "bernoulli") return bernoulli(j.at("p").get<double>());
        if (type == "table") return table(j.at("masses").get<std::vector<double>>());
        throw Error(ErrorKind::configuration, "unknown pmf type '" + type + "'");
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::configuration, std::string("malformed pmf: ") + ex.what());
    }
}

// ---------------------------------------------------------------- Occupation

Occupation::Occupation(std::size_t num_vertices, Provenance provenance)
    : counts_(num_vertices, 0), provenance_(std::move(provenance)) {}

Occupation::Occupation(std::vector<std::uint32_t> counts, Provenance provenance)
    : counts_(std::move(counts)), provenance_(std::move(provenance)) {
    total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

Occupation Occupation::constant(const Network& net, const VertexSet& region, std::uint32_t k) {
    std::vector<std::uint32_t> c(net.size(), 0);
    for (VertexId v : region.ids) {
        net.check_vertex(v);
        c[v] = k;
    }
    return Occupation(std::move(c), {"constant", {{"count", k}}, 0});
}

Occupation Occupation::point(const Network& net, VertexId v, std::uint32_t k) {
    net.check_vertex(v);
    std::vector<std::uint32_t> c(net.size(), 0);
    c[v] = k;
    return Occupation(std::move(c), {"point", {{"vertex", v}, {"count", k}}, 0});
}

VertexSet Occupation::support() const {
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < counts_.size(); ++v)
        if (counts_[v] > 0) ids.push_back(v);
    return VertexSet(std::move(ids));
}

bool dominated_by(const Occupation& a, const Occupation& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.counts_[i] > b.counts_[i]) return false;
    return true;
}

namespace {

std::uint64_t vertex_key(const Network& net, VertexId v) {
    if (!net.embedded()) return v;
    std::uint64_t h = 0x8F1BBCDCCA62C1D6ULL;
    for (int c : net.coords(v)) h = rng::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    return h;
}

void check_region(const Network& net, const VertexSet& region) {
    for (VertexId v : region.ids) net.check_vertex(v);
}

} // namespace

Occupation sample_iid(const Network& net, const Pmf& pmf, const VertexSet& region, std::uint64_t seed) {
    check_region(net, region);
    std::vector<std::uint32_t> c(net.size(), 0);
    for (VertexId v : region.ids) {
        rng::Stream s(seed, rng::Tag::occupation, {vertex_key(net, v)});
        c[v] = pmf.sample(s.uniform());
    }
    return Occupation(std::move(c), {"iid", {{"pmf", pmf.to_json()}}, seed});
}

// ---------------------------------------------------------------- ergodic fields

std::vector<double> HiddenMarkovField::stationary() const {
    const std::size_t k = transition.size();
    if (k == 0 || emissions.size() != k)
        throw Error(ErrorKind::configuration, "hidden Markov field needs one emission per state");
    for (const auto& row : transition) {
        if (row.size() != k) throw Error(ErrorKind::configuration, "transition matrix must be square");
        double s = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw Error(ErrorKind::configuration, "negative transition probability");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12) throw Error(ErrorKind::configuration, "transition rows must sum to 1");
    }
    // Solve pi (K - I) = 0 with sum(pi) = 1 by Gaussian elimination on the
    // transposed system, replacing the last equation with normalization.
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) a[i][j] = transition[j][i] - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < k; ++j) a[k - 1][j] = 1.0;
    a[k - 1][k] = 1.0;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-14)
            throw Error(ErrorKind::configuration, "transition matrix has no unique stationary law");
        std::swap(a[piv], a[col]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> pi(k);
    for (std::size_t i = 0; i < k; ++i) pi[i] = a[i][k] / a[i][i];
    return pi;
}

double declared_mean(const ErgodicSpec& spec) {
    return std::visit(
        [](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, IidField>) {
                return f.pmf.mean();
            } else if constexpr (std::is_same_v<T, RotationField>) {
                return f.low + f.high_frequency * (static_cast<double>(f.high) - f.low);
            } else {
                auto pi = f.stationary();
                double m = 0.0;
                for (std::size_t s = 0; s < pi.size(); ++s) m += pi[s] * f.emissions[s].mean();
                return m;
            }
        },
        spec);
}

ErgodicSpec ergodic_spec_from_json(const nlohmann::json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "iid") return IidField{Pmf::from_json(j.at("pmf"))};
        if (type == "rotation") {
            RotationField f;
            f.low = j.value("low", 0u);
            f.high = j.value("high", 1u);
            f.high_frequency = j.value("high_frequency", 0.5);
            f.angles = j.value("angles", std::vector<double>{});
            if (!(f.high_frequency >= 0.0 && f.high_frequency <= 1.0))
                throw Error(ErrorKind::configuration, "rotation high_frequency outside [0, 1]");
            return f;
        }
        if (type == "hidden_markov") {
            HiddenMarkovField f;
            f.transition = j.at("transition").get<std::vector<std::vector<double>>>();
            for (const auto& e : j.at("emissions")) f.emissions.push_back(Pmf::from_json(e));
            f.stationary();
            return f;
        }
        throw Error(ErrorKind::configuration, "unknown ergodic sampler '" + type + "'");
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::configuration, std::string("malformed ergodic spec: ") + ex.what());
    }
}

nlohmann::json to_json(const ErgodicSpec& spec) {
    return std::visit(
        [](const auto& f) -> nlohmann::json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, IidField>) {
                return {{"type", "iid"}, {"pmf", f.pmf.to_json()}};
            } else if constexpr (std::is_same_v<T, RotationField>) {
                return {{"type", "rotation"},
                        {"low", f.low},
                        {"high", f.high},
                        {"high_frequency", f.high_frequency},
                        {"angles", f.angles}};
            } else {
                nlohmann::json e = nlohmann::json::array();
                for (const auto& p : f.emissions) e.push_back(p.to_json());
                return {{"type", "hidden_markov"}, {"transition", f.transition}, {"emissions", e}};
            }
        },
        spec);
}

namespace {

std::vector<double> default_angles(std::size_t d) {
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    std::vector<double> a;
    for (std::size_t i = 0; i < d; ++i) {
        const double r = std::sqrt(static_cast<double>(primes[i % 10]));
        a.push_back(r - std::floor(r));
    }
    return a;
}

std::vector<std::uint32_t> sample_rotation(const Network& net, const RotationField& f, const VertexSet& region,
                                           std::uint64_t seed) {
    const std::size_t d = net.embedded() ? static_cast<std::size_t>(net.dimension()) : 1;
    auto angles = f.angles.empty() ? default_angles(d) : f.angles;
    if (angles.size() != d) throw Error(ErrorKind::configuration, "rotation needs one angle per dimension");
    rng::Stream s(seed, rng::Tag::occupation, {0x524F54ULL});
    const long double phase = s.uniform();
    std::vector<std::uint32_t> c(net.size(), 0);
    for (VertexId v : region.ids) {
        long double t = phase;
        if (net.embedded()) {
            auto x = net.coords(v);
            for (std::size_t i = 0; i < d; ++i) t += static_cast<long double>(angles[i]) * x[i];
        } else {
            t += static_cast<long double>(angles[0]) * v;
        }
        t -= std::floor(t);
        c[v] = t < f.high_frequency ? f.high : f.low;
    }
    return c;
}

std::size_t draw_row(const std::vector<double>& row, double u) {
    double cdf = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        cdf += row[j];
        if (u < cdf) return j;
    }
    for (std::size_t j = row.size(); j-- > 0;)
        if (row[j] > 0.0) return j;
    return 0;
}

std::vector<std::uint32_t> sample_hidden_markov(const Network& net, const HiddenMarkovField& f,
                                                const VertexSet& region, std::uint64_t seed) {
    const auto pi = f.stationary();
    const std::size_t k = pi.size();
    // Time reversal of the stationary chain, used to extend each line
    // toward negative coordinates.
    std::vector<std::vector<double>> reversed(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            reversed[i][j] = pi[i] > 0.0 ? pi[j] * f.transition[j][i] / pi[i] : (i == j ? 1.0 : 0.0);

    // Group region vertices into lines: all coordinates but the first fixed.
    struct Line {
        std::uint64_t key = 0;
        long lo = 0, hi = 0;
        std::vector<std::pair<long, VertexId>> members;
    };
    std::map<std::vector<int>, Line> lines;
    for (VertexId v : region.ids) {
        std::vector<int> rest;
        long pos = v;
        if (net.embedded()) {
            auto x = net.coords(v);
            pos = x[0];
            rest.assign(x.begin() + 1, x.end());
        }
        auto& line = lines[rest];
        line.members.emplace_back(pos, v);
    }
    std::vector<std::uint32_t> c(net.size(), 0);
    for (auto& [rest, line] : lines) {
        std::uint64_t key = 0x484D4DULL;
        for (int r : rest) key = rng::splitmix64(key ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(r)));
        line.lo = 0;
        line.hi = 0;
        for (const auto& [pos, v] : line.members) {
            line.lo = std::min(line.lo, pos);
            line.hi = std::max(line.hi, pos);
        }
        std::vector<std::size_t> state(static_cast<std::size_t>(line.hi - line.lo + 1));
        auto at = [&](long pos) -> std::size_t& { return state[static_cast<std::size_t>(pos - line.lo)]; };
        auto uniform_at = [&](long pos) {
            return rng::Stream(seed, rng::Tag::occupation, {key, static_cast<std::uint64_t>(pos), 1}).uniform();
        };
        at(0) = draw_row(pi, uniform_at(0));
        for (long p = 1; p <= line.hi; ++p) at(p) = draw_row(f.transition[at(p - 1)], uniform_at(p));
        for (long p = -1; p >= line.lo; --p) at(p) = draw_row(reversed[at(p + 1)], uniform_at(p));
        for (const auto& [pos, v] : line.members) {
            rng::Stream e(seed, rng::Tag::occupation, {key, static_cast<std::uint64_t>(pos), 2});
            c[v] = f.emissions[at(pos)].sample(e.uniform());
        }
    }
    return c;
}

} // namespace

Occupation sample_ergodic(const Network& net, const ErgodicSpec& spec, const VertexSet& region, std::uint64_t seed) {
    check_region(net, region);
    const double mu = declared_mean(spec);
    nlohmann::json params = to_json(spec);
    params["mean"] = mu;
    std::vector<std::uint32_t> counts = std::visit(
        [&](const auto& f) -> std::vector<std::uint32_t> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, IidField>) {
                auto occ = sample_iid(net, f.pmf, region, seed);
                return {occ.counts().begin(), occ.counts().end()};
            } else if constexpr (std::is_same_v<T, RotationField>) {
                return sample_rotation(net, f, region, seed);
            } else {
                return sample_hidden_markov(net, f, region, seed);
            }
        },
        spec);
    return Occupation(std::move(counts), {"ergodic", std::move(params), seed});
}

Occupation restrict(const Occupation& occ, const VertexSet& region) {
    std::vector<std::uint32_t> c(occ.size(), 0);
    for (VertexId v : region.ids) {
        if (v >= occ.size()) throw Error(ErrorKind::unknown_vertex, "region vertex outside occupation");
        c[v] = occ[v];
    }
    Provenance p = occ.provenance();
    p.parameters["restricted_to"] = region.size();
    return Occupation(std::move(c), std::move(p));
}

double window_average(const Occupation& occ, const VertexSet& region) {
    if (region.empty()) throw Error(ErrorKind::invalid_parameter, "window average over an empty region");
    std::uint64_t sum = 0;
    for (VertexId v : region.ids) sum += occ[v];
    return static_cast<double>(sum) / static_cast<double>(region.size());
}

void write_occupation_csv(std::ostream& os, const Occupation& occ) {
    nlohmann::json header = {{"sampler", occ.provenance().sampler},
                             {"parameters", occ.provenance().parameters},
                             {"seed", occ.provenance().seed},
                             {"vertices", occ.size()},
                             {"total", occ.total()}};
    os << "# provenance: " << header.dump() << "\r\n";
    csv::write_row(os, {"vertex", "count"});
    for (VertexId v = 0; v < occ.size(); ++v)
        if (occ[v] > 0) csv::write_row(os, {std::to_string(v), std::to_string(occ[v])});
}

Occupation read_occupation_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# provenance: ", 0) != 0)
        throw Error(ErrorKind::configuration, "occupation CSV must start with a provenance line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line.substr(14));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::configuration, std::string("bad provenance header: ") + ex.what());
    }
    const auto n = header.at("vertices").get<std::size_t>();
    std::vector<std::uint32_t> counts(n, 0);
    std::vector<std::string> row;
    if (!csv::read_row(is, row) || row != std::vector<std::string>{"vertex", "count"})
        throw Error(ErrorKind::configuration, "occupation CSV header must be 'vertex,count'");
    while (csv::read_row(is, row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != 2) throw Error(ErrorKind::configuration, "occupation CSV rows need two fields");
        const auto v = std::stoul(row[0]);
        if (v >= n) throw Error(ErrorKind::unknown_vertex, "occupation CSV vertex out of range");
        counts[v] = static_cast<std::uint32_t>(std::stoul(row[1]));
    }
    Provenance p{header.value("sampler", std::string("csv")), header.value("parameters", nlohmann::json::object()),
                 header.value("seed", std::uint64_t{0})};
    return Occupation(std::move(counts), std::move(p));
}

} // namespace arwlab
