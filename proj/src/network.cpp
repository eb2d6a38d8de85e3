#include "arwlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include "arwlab/error.hpp"

namespace arwlab {

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::graph: return "graph";
    case Metric::euclidean: return "euclidean";
    case Metric::box: return "box";
    case Metric::none: return "none";
    }
    return "none";
}

Metric metric_from_string(std::string_view s) {
    if (s == "graph") return Metric::graph;
    if (s == "euclidean") return Metric::euclidean;
    if (s == "box") return Metric::box;
    if (s == "none") return Metric::none;
    throw Error(ErrorKind::invalid_parameter, "unknown metric '" + std::string(s) + "'");
}

VertexSet::VertexSet(std::vector<VertexId> v, Tag t) : ids(std::move(v)), tag(t) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

bool VertexSet::contains(VertexId v) const { return std::binary_search(ids.begin(), ids.end(), v); }

std::vector<char> VertexSet::mask(std::size_t universe) const {
    std::vector<char> m(universe, 0);
    for (VertexId v : ids) {
        if (v >= universe) throw Error(ErrorKind::unknown_vertex, "vertex " + std::to_string(v) + " outside network");
        m[v] = 1;
    }
    return m;
}

struct Network::DistanceCache {
    std::mutex mutex;
    std::unordered_map<VertexId, std::unique_ptr<const std::vector<int>>> by_source;
};

namespace {

bool in_metric_ball(std::span<const int> x, int m, Metric metric) {
    switch (metric) {
    case Metric::graph: {
        long s = 0;
        for (int c : x) s += std::abs(c);
        return s < m;
    }
    case Metric::euclidean: {
        long s = 0;
        for (int c : x) s += static_cast<long>(c) * c;
        return s < static_cast<long>(m) * m;
    }
    case Metric::box: {
        int s = 0;
        for (int c : x) s = std::max(s, std::abs(c));
        return s < m;
    }
    case Metric::none: return true;
    }
    return true;
}

} // namespace

Network::Network(std::size_t num_vertices, std::vector<EdgeSpec> edges)
    : edges_(std::move(edges)), cache_(std::make_shared<DistanceCache>()) {
    offsets_.assign(num_vertices + 1, 0);
    build_adjacency();
    validate();
    mark_interior();
}

Network::Network(std::size_t num_vertices, std::vector<EdgeSpec> edges, int dimension, Metric metric, int radius,
                 std::vector<int> coords)
    : edges_(std::move(edges)), dimension_(dimension), metric_(metric), radius_(radius), coords_(std::move(coords)),
      cache_(std::make_shared<DistanceCache>()) {
    if (dimension < 1) throw Error(ErrorKind::invalid_parameter, "embedded network needs dimension >= 1");
    if (coords_.size() != num_vertices * static_cast<std::size_t>(dimension))
        throw Error(ErrorKind::invalid_parameter, "coordinate table does not match vertex count");
    offsets_.assign(num_vertices + 1, 0);
    build_adjacency();
    validate();
    mark_interior();
}

void Network::build_adjacency() {
    const std::size_t n = offsets_.size() - 1;
    if (n == 0) throw Error(ErrorKind::degenerate_network, "network has no vertices");
    for (const auto& e : edges_) {
        if (e.u >= n || e.v >= n) throw Error(ErrorKind::unknown_vertex, "edge endpoint outside vertex range");
        if (e.u == e.v) throw Error(ErrorKind::degenerate_network, "self loop at vertex " + std::to_string(e.u));
        if (!(e.c > 0.0) || !std::isfinite(e.c))
            throw Error(ErrorKind::invalid_parameter, "conductances must be positive and finite");
        ++offsets_[e.u + 1];
        ++offsets_[e.v + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        adjacency_[fill[e.u]++] = {e.v, e.c};
        adjacency_[fill[e.v]++] = {e.u, e.c};
    }
    weights_.assign(n, 0.0);
    for (VertexId v = 0; v < n; ++v) {
        auto begin = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]);
        auto end = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]);
        std::sort(begin, end, [](const Neighbor& a, const Neighbor& b) { return a.to < b.to; });
        if (std::adjacent_find(begin, end, [](const Neighbor& a, const Neighbor& b) { return a.to == b.to; }) != end)
            throw Error(ErrorKind::degenerate_network, "duplicate edge at vertex " + std::to_string(v));
        for (auto it = begin; it != end; ++it) weights_[v] += it->conductance;
    }
}

void Network::validate() const {
    const std::size_t n = size();
    for (VertexId v = 0; v < n; ++v) {
        if (offsets_[v] == offsets_[v + 1] && n > 1)
            throw Error(ErrorKind::degenerate_network, "isolated vertex " + std::to_string(v));
    }
    std::vector<char> seen(n, 0);
    std::deque<VertexId> queue{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
        VertexId v = queue.front();
        queue.pop_front();
        for (const auto& nb : neighbors(v)) {
            if (!seen[nb.to]) {
                seen[nb.to] = 1;
                ++reached;
                queue.push_back(nb.to);
            }
        }
    }
    if (reached != n) throw Error(ErrorKind::degenerate_network, "network is not connected");

    if (embedded()) {
        for (const auto& e : edges_) {
            auto a = coords(e.u);
            auto b = coords(e.v);
            int l1 = 0;
            for (int i = 0; i < dimension_; ++i) l1 += std::abs(a[i] - b[i]);
            if (l1 != 1)
                throw Error(ErrorKind::invalid_parameter, "lattice edge " + std::to_string(e.u) + "-" +
                                                              std::to_string(e.v) + " is not nearest-neighbor");
        }
    }
}

void Network::mark_interior() {
    const std::size_t n = size();
    interior_mask_.assign(n, 1);
    if (embedded()) {
        coord_order_.resize(n);
        std::iota(coord_order_.begin(), coord_order_.end(), VertexId{0});
        std::sort(coord_order_.begin(), coord_order_.end(), [&](VertexId a, VertexId b) {
            auto ca = coords(a);
            auto cb = coords(b);
            return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
        });
        for (std::size_t i = 1; i < n; ++i) {
            auto a = coords(coord_order_[i - 1]);
            if (std::equal(a.begin(), a.end(), coords(coord_order_[i]).begin()))
                throw Error(ErrorKind::invalid_parameter, "two vertices share coordinates");
        }
        std::vector<int> zero(static_cast<std::size_t>(dimension_), 0);
        origin_ = find(zero).value_or(0);
    }
    if (embedded() && metric_ != Metric::none) {
        for (VertexId v = 0; v < n; ++v) interior_mask_[v] = in_metric_ball(coords(v), radius_, metric_) ? 1 : 0;
    }
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < n; ++v)
        if (interior_mask_[v]) ids.push_back(v);
    interior_ = VertexSet(std::move(ids), VertexSet::Tag::interior);
}

void Network::check_vertex(VertexId v) const {
    if (v >= size()) throw Error(ErrorKind::unknown_vertex, "vertex " + std::to_string(v) + " not in network");
}

std::span<const Neighbor> Network::neighbors(VertexId v) const {
    check_vertex(v);
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

double Network::conductance(VertexId x, VertexId y) const {
    auto nbs = neighbors(x);
    auto it = std::lower_bound(nbs.begin(), nbs.end(), y, [](const Neighbor& a, VertexId b) { return a.to < b; });
    return (it != nbs.end() && it->to == y) ? it->conductance : 0.0;
}

std::span<const int> Network::coords(VertexId v) const {
    check_vertex(v);
    if (!embedded()) return {};
    return {coords_.data() + static_cast<std::size_t>(v) * dimension_, static_cast<std::size_t>(dimension_)};
}

std::optional<VertexId> Network::find(std::span<const int> c) const {
    if (!embedded() || c.size() != static_cast<std::size_t>(dimension_)) return std::nullopt;
    auto it = std::lower_bound(coord_order_.begin(), coord_order_.end(), c, [&](VertexId v, std::span<const int> key) {
        auto a = coords(v);
        return std::lexicographical_compare(a.begin(), a.end(), key.begin(), key.end());
    });
    if (it != coord_order_.end()) {
        auto a = coords(*it);
        if (std::equal(a.begin(), a.end(), c.begin())) return *it;
    }
    return std::nullopt;
}

std::optional<VertexId> Network::find(std::initializer_list<int> c) const {
    return find(std::span<const int>(c.begin(), c.size()));
}

const std::vector<int>& Network::distances_from(VertexId v) const {
    check_vertex(v);
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->by_source[v];
    if (!slot) {
        std::vector<int> dist(size(), -1);
        std::deque<VertexId> queue{v};
        dist[v] = 0;
        while (!queue.empty()) {
            VertexId x = queue.front();
            queue.pop_front();
            for (const auto& nb : neighbors(x)) {
                if (dist[nb.to] < 0) {
                    dist[nb.to] = dist[x] + 1;
                    queue.push_back(nb.to);
                }
            }
        }
        slot = std::make_unique<const std::vector<int>>(std::move(dist));
    }
    return *slot;
}

Network build_lattice(int d, int m, Metric metric, const ConductanceFn& conductance) {
    if (d < 1) throw Error(ErrorKind::invalid_parameter, "lattice dimension must be >= 1");
    if (m < 1) throw Error(ErrorKind::invalid_parameter, "lattice radius must be >= 1");
    if (metric == Metric::none) throw Error(ErrorKind::invalid_parameter, "lattice needs a metric");

    // Every window vertex lies in [-m, m]^d; enumerate that cube in
    // lexicographic order and keep ball points and their outer neighbors.
    const int side = 2 * m + 1;
    std::size_t cube = 1;
    for (int i = 0; i < d; ++i) cube *= static_cast<std::size_t>(side);

    std::vector<int> point(static_cast<std::size_t>(d));
    auto decode = [&](std::size_t idx) {
        for (int i = d - 1; i >= 0; --i) {
            point[static_cast<std::size_t>(i)] = static_cast<int>(idx % side) - m;
            idx /= side;
        }
    };
    std::vector<char> inside(cube, 0);
    for (std::size_t idx = 0; idx < cube; ++idx) {
        decode(idx);
        inside[idx] = in_metric_ball(point, m, metric) ? 1 : 0;
    }
    std::vector<std::size_t> stride(static_cast<std::size_t>(d));
    {
        std::size_t s = 1;
        for (int i = d - 1; i >= 0; --i) {
            stride[static_cast<std::size_t>(i)] = s;
            s *= static_cast<std::size_t>(side);
        }
    }
    std::vector<std::int64_t> id_of(cube, -1);
    std::vector<int> coords;
    VertexId next = 0;
    for (std::size_t idx = 0; idx < cube; ++idx) {
        decode(idx);
        bool keep = inside[idx] != 0;
        for (int i = 0; i < d && !keep; ++i) {
            const int c = point[static_cast<std::size_t>(i)];
            const std::size_t st = stride[static_cast<std::size_t>(i)];
            if (c > -m && inside[idx - st]) keep = true;
            if (c < m && inside[idx + st]) keep = true;
        }
        if (keep) {
            id_of[idx] = next++;
            coords.insert(coords.end(), point.begin(), point.end());
        }
    }
    std::vector<EdgeSpec> edges;
    std::vector<int> other(static_cast<std::size_t>(d));
    for (std::size_t idx = 0; idx < cube; ++idx) {
        if (id_of[idx] < 0) continue;
        decode(idx);
        for (int i = 0; i < d; ++i) {
            if (point[static_cast<std::size_t>(i)] == m) continue;
            const std::size_t nb = idx + stride[static_cast<std::size_t>(i)];
            if (id_of[nb] < 0) continue;
            double c = 1.0;
            if (conductance) {
                other = point;
                ++other[static_cast<std::size_t>(i)];
                c = conductance(point, other);
            }
            edges.push_back({static_cast<VertexId>(id_of[idx]), static_cast<VertexId>(id_of[nb]), c});
        }
    }
    return Network(next, std::move(edges), d, metric, m, std::move(coords));
}

Kernel::Kernel(std::vector<std::vector<Entry>> rows, bool nearest_neighbor, bool reversible_srw)
    : nearest_neighbor_(nearest_neighbor), reversible_srw_(reversible_srw) {
    offsets_.push_back(0);
    for (std::size_t x = 0; x < rows.size(); ++x) {
        auto& r = rows[x];
        if (r.empty()) throw Error(ErrorKind::degenerate_network, "kernel row " + std::to_string(x) + " is empty");
        std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.to < b.to; });
        double acc = 0.0;
        for (const auto& e : r) {
            if (!(e.p >= 0.0)) throw Error(ErrorKind::invalid_parameter, "negative transition probability");
            if (e.to >= rows.size()) throw Error(ErrorKind::unknown_vertex, "kernel target outside vertex range");
            acc += e.p;
            entries_.push_back(e);
            cumulative_.push_back(acc);
        }
        if (std::abs(acc - 1.0) > 1e-12)
            throw Error(ErrorKind::invalid_parameter, "kernel row " + std::to_string(x) + " does not sum to 1");
        offsets_.push_back(entries_.size());
    }
}

std::span<const Kernel::Entry> Kernel::row(VertexId x) const {
    if (x >= size()) throw Error(ErrorKind::unknown_vertex, "vertex " + std::to_string(x) + " not in kernel");
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
}

double Kernel::probability(VertexId x, VertexId y) const {
    for (const auto& e : row(x))
        if (e.to == y) return e.p;
    return 0.0;
}

VertexId Kernel::sample(VertexId x, double u) const {
    const std::size_t b = offsets_[x];
    const std::size_t e = offsets_[x + 1];
    const double target = u * cumulative_[e - 1];
    auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(b),
                               cumulative_.begin() + static_cast<std::ptrdiff_t>(e) - 1, target);
    return entries_[static_cast<std::size_t>(it - cumulative_.begin())].to;
}

Kernel srw_kernel(const Network& net) {
    std::vector<std::vector<Kernel::Entry>> rows(net.size());
    for (VertexId x = 0; x < net.size(); ++x) {
        const double pi = net.weight(x);
        if (net.degree(x) == 0 || !(pi > 0.0))
            throw Error(ErrorKind::degenerate_network, "isolated vertex " + std::to_string(x));
        for (const auto& nb : net.neighbors(x)) rows[x].push_back({nb.to, nb.conductance / pi});
    }
    // Network validation already rejects non-nearest-neighbor lattice edges.
    return Kernel(std::move(rows), net.embedded(), true);
}

bool gamma_check(const Network& net, double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorKind::invalid_parameter, "gamma must be positive");
    const double upper = 1.0 / gamma;
    for (VertexId x = 0; x < net.size(); ++x) {
        const double pi = net.weight(x);
        if (!(gamma < pi && pi < upper)) return false;
    }
    for (const auto& e : net.edges())
        if (!(gamma < e.c && e.c < upper)) return false;
    return true;
}

VertexSet ball(const Network& net, VertexId center, int r) {
    if (r < 1) throw Error(ErrorKind::invalid_parameter, "ball radius must be >= 1");
    const auto& dist = net.distances_from(center);
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < dist.size(); ++v)
        if (dist[v] >= 0 && dist[v] < r) ids.push_back(v);
    return VertexSet(std::move(ids), VertexSet::Tag::ball);
}

VertexSet boundary(const Network& net, VertexId center, int r) {
    if (r < 1) throw Error(ErrorKind::invalid_parameter, "boundary radius must be >= 1");
    const auto& dist = net.distances_from(center);
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < dist.size(); ++v)
        if (dist[v] == r) ids.push_back(v);
    return VertexSet(std::move(ids), VertexSet::Tag::boundary);
}

VertexSet metric_ball(const Network& net, VertexId center, int m, Metric metric) {
    net.check_vertex(center);
    if (m < 1) throw Error(ErrorKind::invalid_parameter, "ball radius must be >= 1");
    if (metric == Metric::graph || !net.embedded()) return ball(net, center, m);
    if (metric == Metric::none) throw Error(ErrorKind::invalid_parameter, "metric ball needs a metric");
    auto c0 = net.coords(center);
    std::vector<int> diff(c0.size());
    std::vector<VertexId> ids;
    for (VertexId v = 0; v < net.size(); ++v) {
        auto c = net.coords(v);
        for (std::size_t i = 0; i < c.size(); ++i) diff[i] = c[i] - c0[i];
        if (in_metric_ball(diff, m, metric)) ids.push_back(v);
    }
    return VertexSet(std::move(ids), VertexSet::Tag::ball);
}

nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["dimension"] = net.dimension();
    j["metric"] = std::string(to_string(net.metric()));
    j["radius"] = net.radius();
    auto& vs = j["vertices"] = nlohmann::json::array();
    for (VertexId v = 0; v < net.size(); ++v) {
        auto c = net.coords(v);
        vs.push_back({{"id", v}, {"coords", std::vector<int>(c.begin(), c.end())}});
    }
    auto& es = j["edges"] = nlohmann::json::array();
    for (const auto& e : net.edges()) es.push_back({{"u", e.u}, {"v", e.v}, {"c", e.c}});
    return j;
}

Network network_from_json(const nlohmann::json& j) {
    try {
        const int dimension = j.value("dimension", 0);
        const Metric metric = metric_from_string(j.value("metric", std::string("none")));
        const int radius = j.value("radius", 0);
        const auto& vs = j.at("vertices");
        const std::size_t n = vs.size();
        std::vector<int> coords(n * static_cast<std::size_t>(std::max(dimension, 0)));
        std::vector<char> seen(n, 0);
        for (const auto& v : vs) {
            const auto id = v.at("id").get<std::size_t>();
            if (id >= n || seen[id])
                throw Error(ErrorKind::invalid_parameter, "vertex ids must be dense and unique");
            seen[id] = 1;
            if (dimension > 0) {
                auto c = v.at("coords").get<std::vector<int>>();
                if (c.size() != static_cast<std::size_t>(dimension))
                    throw Error(ErrorKind::invalid_parameter, "coordinate length differs from dimension");
                std::copy(c.begin(), c.end(), coords.begin() + static_cast<std::ptrdiff_t>(id * dimension));
            }
        }
        std::vector<EdgeSpec> edges;
        for (const auto& e : j.at("edges"))
            edges.push_back({e.at("u").get<VertexId>(), e.at("v").get<VertexId>(), e.at("c").get<double>()});
        if (dimension > 0) return Network(n, std::move(edges), dimension, metric, radius, std::move(coords));
        return Network(n, std::move(edges));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::configuration, std::string("malformed network JSON: ") + ex.what());
    }
}

} // namespace arwlab
