#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "arwlab/arw.hpp"
#include "arwlab/network.hpp"
#include "arwlab/occupation.hpp"

namespace arwlab {

inline constexpr std::string_view version = "1.0.0";

enum class ExperimentKind { arw, msia, couple, criterion, animals, sweep };
enum class OutputFormat { csv, json };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

struct SweepGrid {
    std::vector<double> mu;     // occupation intensity (Poisson mean / Bernoulli p)
    std::vector<double> lambda; // sleep rates; "inf" allowed in config
    std::vector<int> m;         // window radii
    /// Trial metric: fraction of trials with at least this many origin visits.
    std::uint64_t visits_at_least = 1;
};

/// Parsed and validated experiment description. The JSON document it came
/// from is kept verbatim for hashing and the manifest.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::arw;
    std::string name = "experiment";
    nlohmann::json network;    // {"lattice": {...}} | {"inline": {...}} | {"file": path}
    nlohmann::json occupation; // {"type": constant|point|iid|rotation|hidden_markov|file, ...}
    double sleep_rate = infinite_rate;
    Boundary boundary = Boundary::absorbing;
    std::uint64_t max_events = 10'000'000;
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    std::size_t jobs = 1;
    OutputFormat format = OutputFormat::csv;

    std::uint64_t visits_at_least = 1;            // arw
    bool hop_trace = false;                       // arw: dump every hop
    std::string ordering = "lexicographic";       // msia
    std::optional<std::string> compare_ordering;  // msia abelian check
    double gamma_fraction = 1.0;                  // couple: thinning of eta0
    std::vector<int> schedule;                    // criterion
    Metric region_metric = Metric::graph;         // criterion
    std::size_t n_max = 20;                       // animals
    std::size_t exact_cap = 18;                   // animals
    SweepGrid grid;                               // sweep

    nlohmann::json document;
};

/// Throws Error(configuration) with a message naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& document);

/// seed for (master, experiment, cell, trial); independent of run order.
std::uint64_t trial_seed(std::uint64_t master, std::string_view experiment, std::uint64_t cell, std::uint64_t trial);

/// FNV-1a 64 of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& document);

/// Streaming mean and variance.
class Welford {
public:
    void add(double x);
    std::uint64_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance (0 for fewer than two samples).
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions
/// escaping body are the caller's responsibility.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

Network build_network(const nlohmann::json& spec);
/// Occupation on the network's interior from the spec, drawn with seed.
Occupation build_occupation(const nlohmann::json& spec, const Network& net, std::uint64_t seed);

struct RunOutcome {
    int exit_code = 0; // 0 success, 3 partial failure
    std::uint64_t failed_trials = 0;
    std::vector<std::filesystem::path> files;
    nlohmann::json summary;
};

/// Executes the experiment and writes summary.json, manifest.json and the
/// result table (results.csv or results.json) into cfg.out.
RunOutcome run_experiment(const ExperimentConfig& cfg);

} // namespace arwlab
