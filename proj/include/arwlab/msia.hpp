#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arwlab/arw.hpp"
#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"

namespace arwlab {

/// Per-vertex lists of jump destinations. Entry (x, i) is drawn from P(x, .)
/// with substream (seed, x, i), so it never depends on which entries were
/// requested before. Lists are extended on demand.
class InstructionStacks {
public:
    InstructionStacks(const Kernel& kernel, std::uint64_t seed);

    VertexId at(VertexId x, std::size_t i);
    std::uint64_t seed() const noexcept { return seed_; }

private:
    const Kernel& kernel_;
    std::uint64_t seed_;
    std::vector<std::vector<VertexId>> cache_;
};

/// Release order for explorers. round_robin releases one explorer per
/// multiply-occupied vertex per pass over the sequence; exhaust empties each
/// vertex down to one explorer before moving on.
struct Ordering {
    enum class Mode { round_robin, exhaust };

    std::string name;
    std::vector<VertexId> sequence;
    Mode mode = Mode::round_robin;

    static Ordering lexicographic(std::size_t n);
    static Ordering reverse(std::size_t n);
    static Ordering random_permutation(std::size_t n, std::uint64_t seed);
    static Ordering source_by_source(std::size_t n);
};

inline constexpr std::uint64_t default_step_cap = 10'000'000;

struct MsiaResult {
    /// Interior vertices holding an explorer at the end.
    VertexSet occupied;
    /// Explorers that stepped off the interior (absorbed).
    std::uint64_t exited = 0;
    /// [initial count >= 2] + number of explorer arrivals, per vertex.
    std::vector<std::uint64_t> visits;
    /// Steps taken by each walking explorer, in release order.
    std::vector<std::uint64_t> path_lengths;
    std::uint64_t total_steps = 0;
    std::string ordering;
    bool inconclusive = false;
};

/// Diaconis-Fulton aggregation on the network interior: explorers consume
/// the stacks through one shared pointer per vertex and settle at the first
/// unoccupied interior vertex, or exit.
MsiaResult run_msia(const Network& net, const Occupation& occ, const Ordering& ordering, InstructionStacks& stacks,
                    std::uint64_t step_cap = default_step_cap);

/// nullopt when either run is inconclusive; otherwise whether both orderings
/// produce the same final occupied set from the same stacks.
std::optional<bool> abelian_check(const Network& net, const Kernel& kernel, const Occupation& occ,
                                  std::uint64_t stacks_seed, const Ordering& a, const Ordering& b,
                                  std::uint64_t step_cap = default_step_cap);

/// Walk statistics with ghosts inside a region A containing the target.
struct GhostStats {
    /// Walks that visit the target before exiting A.
    std::uint64_t walks_hitting = 0; // W
    /// Of those, walks whose first visit happens after settling.
    std::uint64_t ghost_hits = 0; // L
    /// Independent one-walk-per-vertex experiment over A.
    std::uint64_t independent_hits = 0; // L-hat
    /// Explorers that visit the target before settling and before exiting,
    /// counted directly during the explorer phase.
    std::uint64_t explorer_hits = 0;
    std::uint64_t explorers = 0;
    std::uint64_t exited = 0;
    std::optional<double> delta;
    /// W - L < delta / 3 (only with delta).
    std::optional<bool> event_f;
    bool inconclusive = false;

    double third_delta() const { return delta ? *delta / 3.0 : 0.0; }
};

/// MSIA from occ (supported in region) where every explorer's walk continues
/// as a ghost after it settles, until it hits the target or exits region.
/// Explorer walks use independent substreams so W is a sum of independent
/// indicators. L-hat uses fresh randomness.
GhostStats run_with_ghosts(const Network& net, const Kernel& kernel, const Occupation& occ, VertexId target,
                           const VertexSet& region, std::uint64_t seed, std::optional<double> delta = std::nullopt,
                           std::uint64_t step_cap = default_step_cap);

struct CouplingReport {
    /// beta_T(x): trace entries consumed at x.
    std::vector<std::uint64_t> consumed;
    /// alpha(x): hops out of x in the ARW run.
    std::vector<std::uint64_t> available;
    /// [gamma0(x) >= 2] + explorer arrivals at x.
    std::vector<std::uint64_t> explorer_visits;
    VertexSet settled;
    std::uint64_t moves = 0;
    std::uint64_t exited = 0;
    bool success = false;
    /// The source run was not stabilized and an explorer ran out of trace.
    bool inconclusive = false;
};

/// Runs gamma0-MSIA as a marginal of the ARW run on eta0: an explorer at v
/// takes the destination of the next unassigned hop out of v.
CouplingReport coupled_replay(const Network& net, const ArwRunResult& source, const Occupation& gamma0,
                              const Occupation& eta0);

} // namespace arwlab
