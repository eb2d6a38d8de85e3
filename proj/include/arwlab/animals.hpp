#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "arwlab/arw.hpp"
#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"

namespace arwlab {

enum class AnimalMethod {
    exact_path,        ///< 1-D window: intervals through the origin
    exact_enumeration, ///< branch-and-bound over connected sets
    heuristic,         ///< greedy growth + local swaps; a lower bound only
};

std::string_view to_string(AnimalMethod m);

struct AnimalOptions {
    /// Largest n solved exactly by enumeration.
    std::size_t exact_cap = 18;
    /// Search-tree node budget per n; exceeding it falls back to the heuristic.
    std::uint64_t node_budget = 50'000'000;
};

struct Animal {
    std::uint64_t weight = 0;
    VertexSet witness; ///< connected, contains the origin, |witness| = n
    AnimalMethod method = AnimalMethod::exact_enumeration;
};

/// Maximum total occupation over connected n-vertex sets containing origin.
Animal max_weight_animal(const Occupation& occ, const Network& net, VertexId origin, std::size_t n,
                         const AnimalOptions& opt = {});

struct AnimalReport {
    VertexId origin = 0;
    std::size_t n_max = 0;
    /// W[n] for n = 0..n_max (W[0] = 0).
    std::vector<std::uint64_t> W;
    std::vector<AnimalMethod> method;
    std::vector<VertexSet> witness;
    /// Largest n <= n_max with W(n) >= n; 0 when there is none.
    std::size_t threshold = 0;
    /// W(n_max) >= n_max: the true threshold is at least n_max.
    bool unbounded = false;
    /// Some n above the threshold was only bounded heuristically, so
    /// W(n) < n there is unproven and threshold is a lower bound.
    bool lower_bound_only = false;
    /// max_n W(n)/n over computed n.
    double density_max = 0.0;
    /// Least-squares slope of W(n) against n over the upper half of the table.
    std::optional<double> tail_slope;
};

AnimalReport threshold_A(const Occupation& occ, const Network& net, VertexId origin, std::size_t n_max,
                         const AnimalOptions& opt = {});

/// |C_0| <= threshold for a lambda = infinity, nearest-neighbor run.
bool containment_check(const ArwRunResult& result, const AnimalReport& report);

/// sum_n P[X > n]^{1/d}, truncated once terms drop below 1e-15. Returns
/// +infinity when the term cap is reached first.
double tail_condition(const Pmf& pmf, int d);

nlohmann::json to_json(const AnimalReport& report);
/// Columns n, W, method.
void write_animal_csv(std::ostream& os, const AnimalReport& report);

} // namespace arwlab
