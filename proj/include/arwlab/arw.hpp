#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"

namespace arwlab {

inline constexpr double infinite_rate = std::numeric_limits<double>::infinity();

enum class Boundary {
    absorbing, ///< particles hopping onto a non-interior vertex leave the system
    closed,    ///< the whole window is the graph
};

struct StopCondition {
    /// When set, hitting a cap before stabilization marks the run inconclusive.
    bool until_stable = true;
    std::uint64_t max_events = 10'000'000;
    double max_time = std::numeric_limits<double>::infinity();
};

struct ArwConfig {
    Occupation initial;
    /// lambda > 0, or infinite_rate: a particle sleeps iff it is alone.
    double sleep_rate = infinite_rate;
    Boundary boundary = Boundary::closed;
    StopCondition stop;
    std::uint64_t seed = 0;
};

struct Hop {
    VertexId to;
    double time;
    std::uint32_t particle;
    bool absorbed; ///< the particle left the system with this hop
};

enum class StopReason { stabilized, event_cap, time_cap };

/// Summary of one ARW trajectory.
///
/// Visit convention: a vertex holding an active particle at t = 0 counts one
/// visit; afterwards every arrival of an active particle counts one more
/// (event times are distinct almost surely).
struct ArwRunResult {
    std::vector<std::uint64_t> visits;
    /// traces[x] = time-ordered hops out of x; its length is alpha(x).
    std::vector<std::vector<Hop>> traces;
    std::vector<std::uint32_t> final_active;
    std::vector<std::uint32_t> final_sleeping;
    /// C(T): vertices that held a particle at some time in [0, T].
    std::vector<char> visited;
    VertexSet origin_component;
    VertexId origin = 0;

    std::vector<VertexId> particle_start;
    /// Final vertex per particle; exited particles keep the vertex they hopped to.
    std::vector<VertexId> particle_end;
    std::vector<char> particle_exited;

    StopReason reason = StopReason::stabilized;
    bool stabilized = false;
    /// Stabilization was requested but a cap was hit first.
    bool inconclusive = false;
    std::uint64_t hops = 0;
    std::uint64_t events = 0;
    std::uint64_t exited = 0;
    double time = 0.0;
    double sleep_rate = infinite_rate;
    bool nearest_neighbor = false;
};

/// Continuous-time event-driven simulation. Each active particle carries a
/// rate-1 jump clock; with finite lambda a lone active particle also carries
/// a rate-lambda sleep clock. Arrivals wake sleeping particles. All clocks and
/// jumps of particle i come from substream (seed, i).
ArwRunResult simulate(const Network& net, const Kernel& kernel, const ArwConfig& cfg);

/// Event A_r(x): x visited by an active particle at least r distinct times.
bool visits(const ArwRunResult& result, VertexId x, std::uint64_t r);

/// Connected component of the visited set containing the origin (maybe empty).
const VertexSet& component_of_origin(const ArwRunResult& result);

/// Destinations of the hops out of each vertex, in time order.
std::vector<std::vector<VertexId>> hop_trace(const ArwRunResult& result);

/// Final counts obtained by applying every recorded hop, in time order, to
/// the initial occupation.
std::vector<std::uint32_t> replay_counts(const Occupation& initial, const ArwRunResult& result);

/// Every particle that ends in C_0(T) also started there.
bool origin_component_closed(const ArwRunResult& result);

} // namespace arwlab
