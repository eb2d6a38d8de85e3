#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arwlab/network.hpp"

namespace arwlab {

/// Probability mass function on {0, 1, 2, ...}: an explicit table, or a
/// Poisson law evaluated analytically.
class Pmf {
public:
    static Pmf dirac(std::uint32_t k);
    static Pmf bernoulli(double p);
    static Pmf poisson(double mean);
    /// Masses must be nonnegative and sum to 1 within 1e-12.
    static Pmf table(std::vector<double> masses);

    double mass(std::uint64_t k) const;
    /// P[X > n], summed directly from the upper terms.
    double tail(std::uint64_t n) const;
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    /// Exact inversion of the CDF at u in [0, 1).
    std::uint32_t sample(double u) const;

    const std::string& name() const noexcept { return name_; }
    nlohmann::json to_json() const;
    static Pmf from_json(const nlohmann::json& j);

private:
    Pmf() = default;
    void finish_moments();

    std::string name_;
    std::vector<double> table_;
    std::optional<double> poisson_mean_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

struct Provenance {
    std::string sampler;
    nlohmann::json parameters = nlohmann::json::object();
    std::uint64_t seed = 0;
};

/// Particle counts per vertex. Immutable after construction.
class Occupation {
public:
    Occupation() = default;
    explicit Occupation(std::size_t num_vertices, Provenance provenance = {"zero"});
    Occupation(std::vector<std::uint32_t> counts, Provenance provenance);

    /// k particles on every vertex of region.
    static Occupation constant(const Network& net, const VertexSet& region, std::uint32_t k);
    /// k particles at v only.
    static Occupation point(const Network& net, VertexId v, std::uint32_t k);

    std::uint32_t operator[](VertexId v) const { return counts_.at(v); }
    std::span<const std::uint32_t> counts() const noexcept { return counts_; }
    std::size_t size() const noexcept { return counts_.size(); }
    std::uint64_t total() const noexcept { return total_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    /// Vertices with a positive count.
    VertexSet support() const;

    /// Pointwise a <= b.
    friend bool dominated_by(const Occupation& a, const Occupation& b);
    friend bool operator==(const Occupation& a, const Occupation& b) { return a.counts_ == b.counts_; }

private:
    std::vector<std::uint32_t> counts_;
    std::uint64_t total_ = 0;
    Provenance provenance_;
};

/// Independent draws, one substream per vertex keyed by (seed, vertex key).
/// The key is the lattice coordinate when the network is embedded, so two
/// windows of the same lattice agree on their overlap.
Occupation sample_iid(const Network& net, const Pmf& pmf, const VertexSet& region, std::uint64_t seed);

// Translation-ergodic fields.

struct IidField {
    Pmf pmf;
};

/// high if frac(phase + sum_i angle_i * x_i) < high_frequency, else low.
/// The phase is uniform from the seed; irrational angles make the field
/// ergodic (an irrational rotation factor).
struct RotationField {
    std::uint32_t low = 0;
    std::uint32_t high = 1;
    double high_frequency = 0.5;
    std::vector<double> angles; // empty -> frac(sqrt(p)) for the first primes
};

/// Stationary hidden Markov chain along the first coordinate of each lattice
/// line; state s emits a draw from emissions[s].
struct HiddenMarkovField {
    std::vector<std::vector<double>> transition;
    std::vector<Pmf> emissions;

    std::vector<double> stationary() const;
};

using ErgodicSpec = std::variant<IidField, RotationField, HiddenMarkovField>;

double declared_mean(const ErgodicSpec& spec);
ErgodicSpec ergodic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ErgodicSpec& spec);

Occupation sample_ergodic(const Network& net, const ErgodicSpec& spec, const VertexSet& region, std::uint64_t seed);

/// eta restricted to region: counts kept inside, zero outside.
Occupation restrict(const Occupation& occ, const VertexSet& region);

/// Arithmetic mean of the counts over region.
double window_average(const Occupation& occ, const VertexSet& region);

/// CSV with a leading "# provenance: {json}" line, then "vertex,count" rows
/// for every vertex with a positive count.
void write_occupation_csv(std::ostream& os, const Occupation& occ);
Occupation read_occupation_csv(std::istream& is);

} // namespace arwlab
