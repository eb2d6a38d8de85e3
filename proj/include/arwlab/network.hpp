#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace arwlab {

using VertexId = std::uint32_t;

/// Metric used to carve a lattice window out of Z^d.
/// graph: l1 ball; euclidean: l2 ball; box: l-infinity ball; none: not embedded.
enum class Metric { graph, euclidean, box, none };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

/// Sorted set of vertex ids with a tag describing how it was produced.
struct VertexSet {
    enum class Tag { arbitrary, ball, boundary, interior, component };

    std::vector<VertexId> ids;
    Tag tag = Tag::arbitrary;

    VertexSet() = default;
    explicit VertexSet(std::vector<VertexId> v, Tag t = Tag::arbitrary);

    bool contains(VertexId v) const;
    std::size_t size() const noexcept { return ids.size(); }
    bool empty() const noexcept { return ids.empty(); }
    /// Dense membership mask over a vertex universe of the given size.
    std::vector<char> mask(std::size_t universe) const;

    friend bool operator==(const VertexSet& a, const VertexSet& b) { return a.ids == b.ids; }
};

struct Neighbor {
    VertexId to;
    double conductance;
};

struct EdgeSpec {
    VertexId u;
    VertexId v;
    double c;
};

/// Finite connected network with symmetric positive conductances.
///
/// Lattice windows carry coordinates and mark an interior (the metric ball
/// A_m) surrounded by an exterior boundary layer. Networks without an
/// embedding treat every vertex as interior. Immutable after construction.
class Network {
public:
    /// Validates: no self loops, no duplicate edges, c > 0, no isolated
    /// vertex, connected. Lattice embeddings must be nearest-neighbor.
    Network(std::size_t num_vertices, std::vector<EdgeSpec> edges);
    Network(std::size_t num_vertices, std::vector<EdgeSpec> edges, int dimension, Metric metric, int radius,
            std::vector<int> coords);

    std::size_t size() const noexcept { return offsets_.size() - 1; }
    std::span<const Neighbor> neighbors(VertexId v) const;
    std::size_t degree(VertexId v) const { return neighbors(v).size(); }
    /// pi(x): sum of incident conductances.
    double weight(VertexId v) const { return weights_.at(v); }
    /// c(x, y), or 0 when x and y are not adjacent.
    double conductance(VertexId x, VertexId y) const;
    const std::vector<EdgeSpec>& edges() const noexcept { return edges_; }

    bool embedded() const noexcept { return dimension_ > 0; }
    int dimension() const noexcept { return dimension_; }
    Metric metric() const noexcept { return metric_; }
    int radius() const noexcept { return radius_; }
    std::span<const int> coords(VertexId v) const;
    std::optional<VertexId> find(std::span<const int> coords) const;
    std::optional<VertexId> find(std::initializer_list<int> coords) const;
    /// Vertex at the coordinate origin for lattices, vertex 0 otherwise.
    VertexId origin() const noexcept { return origin_; }

    bool interior(VertexId v) const { return interior_mask_.at(v) != 0; }
    const VertexSet& interior_set() const noexcept { return interior_; }

    /// BFS graph distances from v (cached, thread-safe).
    const std::vector<int>& distances_from(VertexId v) const;

    void check_vertex(VertexId v) const;

private:
    void build_adjacency();
    void validate() const;
    void mark_interior();

    std::vector<EdgeSpec> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> adjacency_;
    std::vector<double> weights_;

    int dimension_ = 0;
    Metric metric_ = Metric::none;
    int radius_ = 0;
    std::vector<int> coords_;
    std::vector<VertexId> coord_order_;
    VertexId origin_ = 0;
    std::vector<char> interior_mask_;
    VertexSet interior_;

    struct DistanceCache;
    std::shared_ptr<DistanceCache> cache_;
};

using ConductanceFn = std::function<double(std::span<const int>, std::span<const int>)>;

/// Window of Z^d: the metric ball {x : |x| < m} as interior plus the layer of
/// lattice points outside it that touch it. Unit conductances by default.
Network build_lattice(int d, int m, Metric metric, const ConductanceFn& conductance = {});

/// Transition kernel P(x, .) stored row-wise.
class Kernel {
public:
    struct Entry {
        VertexId to;
        double p;
    };

    Kernel(std::vector<std::vector<Entry>> rows, bool nearest_neighbor, bool reversible_srw);

    std::size_t size() const noexcept { return offsets_.size() - 1; }
    std::span<const Entry> row(VertexId x) const;
    double probability(VertexId x, VertexId y) const;
    /// Inverse-CDF draw from row x with u uniform on [0, 1).
    VertexId sample(VertexId x, double u) const;

    bool nearest_neighbor() const noexcept { return nearest_neighbor_; }
    bool reversible_srw() const noexcept { return reversible_srw_; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<Entry> entries_;
    std::vector<double> cumulative_;
    bool nearest_neighbor_;
    bool reversible_srw_;
};

/// Simple random walk on the network: P(x, y) = c(x, y) / pi(x).
Kernel srw_kernel(const Network& net);

/// True iff gamma < pi(x), c(e) < 1/gamma for every vertex and edge.
/// Equality counts as failure.
bool gamma_check(const Network& net, double gamma);

/// B_r(center) = {v : d(v, center) < r}.
VertexSet ball(const Network& net, VertexId center, int r);
/// dB_r(center) = {v : d(v, center) == r}.
VertexSet boundary(const Network& net, VertexId center, int r);
/// Lattice ball in the chosen metric around center, {x : |x - center| < m}.
VertexSet metric_ball(const Network& net, VertexId center, int m, Metric metric);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

} // namespace arwlab
