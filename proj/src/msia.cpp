#include "arwlab/msia.hpp"

#include <algorithm>
#include <numeric>

#include "arwlab/error.hpp"
#include "arwlab/rng.hpp"

namespace arwlab {

InstructionStacks::InstructionStacks(const Kernel& kernel, std::uint64_t seed)
    : kernel_(kernel), seed_(seed), cache_(kernel.size()) {}

VertexId InstructionStacks::at(VertexId x, std::size_t i) {
    if (x >= cache_.size()) throw Error(ErrorKind::unknown_vertex, "stack vertex outside kernel");
    auto& list = cache_[x];
    while (list.size() <= i) {
        rng::Stream s(seed_, rng::Tag::stacks, {x, list.size()});
        list.push_back(kernel_.sample(x, s.uniform()));
    }
    return list[i];
}

Ordering Ordering::lexicographic(std::size_t n) {
    Ordering o{"lexicographic", std::vector<VertexId>(n), Mode::round_robin};
    std::iota(o.sequence.begin(), o.sequence.end(), VertexId{0});
    return o;
}

Ordering Ordering::reverse(std::size_t n) {
    Ordering o = lexicographic(n);
    o.name = "reverse";
    std::reverse(o.sequence.begin(), o.sequence.end());
    return o;
}

Ordering Ordering::random_permutation(std::size_t n, std::uint64_t seed) {
    Ordering o = lexicographic(n);
    o.name = "random-permutation";
    rng::Stream s(seed, rng::Tag::ordering);
    std::shuffle(o.sequence.begin(), o.sequence.end(), s);
    return o;
}

Ordering Ordering::source_by_source(std::size_t n) {
    Ordering o = lexicographic(n);
    o.name = "source-by-source";
    o.mode = Mode::exhaust;
    return o;
}

namespace {

// Calls release(v) once per explorer that must leave v, in the order the
// ordering prescribes. release returns false to abort.
template <class Release>
void drive_releases(const Ordering& ordering, std::vector<std::uint32_t>& count, Release&& release) {
    std::vector<char> listed(count.size(), 0);
    for (VertexId v : ordering.sequence) {
        if (v >= count.size()) throw Error(ErrorKind::unknown_vertex, "ordering names a vertex outside the network");
        listed[v] = 1;
    }
    for (VertexId v = 0; v < count.size(); ++v)
        if (count[v] >= 2 && !listed[v])
            throw Error(ErrorKind::precondition, "ordering misses multiply-occupied vertex " + std::to_string(v));

    if (ordering.mode == Ordering::Mode::exhaust) {
        for (VertexId v : ordering.sequence)
            while (count[v] >= 2)
                if (!release(v)) return;
        return;
    }
    std::vector<VertexId> pending;
    for (VertexId v : ordering.sequence)
        if (count[v] >= 2) pending.push_back(v);
    while (!pending.empty()) {
        for (VertexId v : pending)
            if (count[v] >= 2 && !release(v)) return;
        std::erase_if(pending, [&](VertexId v) { return count[v] < 2; });
    }
}

std::vector<std::uint32_t> initial_counts(const Occupation& occ, const std::vector<char>& inside,
                                          std::string_view what) {
    if (occ.size() != inside.size()) throw Error(ErrorKind::invalid_parameter, "occupation size differs from network");
    std::vector<std::uint32_t> count(occ.counts().begin(), occ.counts().end());
    for (VertexId v = 0; v < count.size(); ++v)
        if (count[v] > 0 && !inside[v])
            throw Error(ErrorKind::precondition, std::string(what) + ": explorers must start inside the region");
    return count;
}

std::vector<char> interior_mask(const Network& net) {
    std::vector<char> m(net.size());
    for (VertexId v = 0; v < net.size(); ++v) m[v] = net.interior(v) ? 1 : 0;
    return m;
}

} // namespace

MsiaResult run_msia(const Network& net, const Occupation& occ, const Ordering& ordering, InstructionStacks& stacks,
                    std::uint64_t step_cap) {
    const auto inside = interior_mask(net);
    auto count = initial_counts(occ, inside, "msia");
    MsiaResult res;
    res.ordering = ordering.name;
    res.visits.assign(net.size(), 0);
    for (VertexId v = 0; v < count.size(); ++v)
        if (count[v] >= 2) res.visits[v] = 1;
    std::vector<std::size_t> pointer(net.size(), 0);

    drive_releases(ordering, count, [&](VertexId v) {
        --count[v];
        VertexId pos = v;
        std::uint64_t steps = 0;
        for (;;) {
            if (res.total_steps >= step_cap) {
                res.inconclusive = true;
                res.path_lengths.push_back(steps);
                return false;
            }
            const VertexId next = stacks.at(pos, pointer[pos]++);
            ++steps;
            ++res.total_steps;
            if (!inside[next]) {
                ++res.exited;
                break;
            }
            ++res.visits[next];
            if (count[next] == 0) {
                count[next] = 1;
                break;
            }
            pos = next;
        }
        res.path_lengths.push_back(steps);
        return true;
    });

    std::vector<VertexId> occupied;
    for (VertexId v = 0; v < count.size(); ++v)
        if (count[v] > 0) occupied.push_back(v);
    res.occupied = VertexSet(std::move(occupied));
    return res;
}

std::optional<bool> abelian_check(const Network& net, const Kernel& kernel, const Occupation& occ,
                                  std::uint64_t stacks_seed, const Ordering& a, const Ordering& b,
                                  std::uint64_t step_cap) {
    // One stack object serves both runs; its entries are fixed by the seed.
    InstructionStacks stacks(kernel, stacks_seed);
    const auto ra = run_msia(net, occ, a, stacks, step_cap);
    const auto rb = run_msia(net, occ, b, stacks, step_cap);
    if (ra.inconclusive || rb.inconclusive) return std::nullopt;
    return ra.occupied == rb.occupied && ra.exited == rb.exited;
}

GhostStats run_with_ghosts(const Network& net, const Kernel& kernel, const Occupation& occ, VertexId target,
                           const VertexSet& region, std::uint64_t seed, std::optional<double> delta,
                           std::uint64_t step_cap) {
    if (!region.contains(target)) throw Error(ErrorKind::precondition, "target must lie in the region");
    const auto inside = region.mask(net.size());
    auto count = initial_counts(occ, inside, "ghost run");

    GhostStats st;
    st.delta = delta;
    std::uint64_t steps = 0;
    std::uint64_t next_id = 0;

    // Walks until the target is hit or the region is left. Returns true on a hit.
    auto finish_walk = [&](rng::Stream& s, VertexId pos) -> bool {
        for (;;) {
            if (pos == target) return true;
            if (!inside[pos]) return false;
            if (steps >= step_cap) {
                st.inconclusive = true;
                return false;
            }
            pos = kernel.sample(pos, s.uniform());
            ++steps;
        }
    };

    // Explorers that never move: their walk is a ghost from time 0, except at
    // the target itself where the t = 0 visit precedes settling.
    for (VertexId v = 0; v < count.size(); ++v) {
        if (count[v] == 0) continue;
        st.explorers += count[v];
        rng::Stream s(seed, rng::Tag::explorer, {next_id++});
        if (v == target) {
            ++st.walks_hitting;
            ++st.explorer_hits;
        } else if (finish_walk(s, v)) {
            ++st.walks_hitting;
            ++st.ghost_hits;
        }
    }

    drive_releases(Ordering::lexicographic(net.size()), count, [&](VertexId v) {
        --count[v];
        rng::Stream s(seed, rng::Tag::explorer, {next_id++});
        VertexId pos = v;
        bool hit = pos == target;
        for (;;) {
            if (steps >= step_cap) {
                st.inconclusive = true;
                return false;
            }
            pos = kernel.sample(pos, s.uniform());
            ++steps;
            if (!inside[pos]) {
                ++st.exited;
                break;
            }
            hit = hit || pos == target;
            if (count[pos] == 0) {
                count[pos] = 1;
                break;
            }
        }
        if (hit) {
            ++st.walks_hitting;
            ++st.explorer_hits;
        } else if (inside[pos] && finish_walk(s, pos)) {
            ++st.walks_hitting;
            ++st.ghost_hits;
        }
        return !st.inconclusive;
    });

    for (VertexId x : region.ids) {
        rng::Stream s(seed, rng::Tag::independent_walk, {x});
        if (finish_walk(s, x)) ++st.independent_hits;
    }
    if (delta) st.event_f = static_cast<double>(st.walks_hitting - st.ghost_hits) < *delta / 3.0;
    return st;
}

CouplingReport coupled_replay(const Network& net, const ArwRunResult& source, const Occupation& gamma0,
                              const Occupation& eta0) {
    const std::size_t n = net.size();
    if (gamma0.size() != n || eta0.size() != n || source.traces.size() != n)
        throw Error(ErrorKind::invalid_parameter, "coupled replay inputs differ in size");
    if (!dominated_by(gamma0, eta0)) throw Error(ErrorKind::precondition, "gamma0 must be dominated by eta0");

    CouplingReport rep;
    rep.consumed.assign(n, 0);
    rep.available.resize(n);
    rep.explorer_visits.assign(n, 0);
    for (VertexId x = 0; x < n; ++x) rep.available[x] = source.traces[x].size();

    std::vector<std::uint32_t> count(gamma0.counts().begin(), gamma0.counts().end());
    for (VertexId x = 0; x < n; ++x)
        if (count[x] >= 2) rep.explorer_visits[x] = 1;

    bool ran_out = false;
    drive_releases(Ordering::lexicographic(n), count, [&](VertexId v) {
        --count[v];
        VertexId pos = v;
        for (;;) {
            const std::uint64_t label = rep.consumed[pos]++;
            if (label >= rep.available[pos]) {
                ran_out = true;
                return false;
            }
            const Hop& hop = source.traces[pos][label];
            ++rep.moves;
            if (hop.absorbed) {
                ++rep.exited;
                return true;
            }
            pos = hop.to;
            ++rep.explorer_visits[pos];
            if (count[pos] == 0) {
                count[pos] = 1;
                return true;
            }
        }
    });

    std::vector<VertexId> settled;
    for (VertexId x = 0; x < n; ++x)
        if (count[x] > 0) settled.push_back(x);
    rep.settled = VertexSet(std::move(settled));

    rep.success = !ran_out;
    for (VertexId x = 0; x < n && rep.success; ++x) rep.success = rep.consumed[x] <= rep.available[x];
    rep.inconclusive = ran_out && !source.stabilized;
    return rep;
}

} // namespace arwlab
