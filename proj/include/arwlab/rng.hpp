#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

// Counter-based seeding: every random quantity in the library is drawn from a
// Stream whose state is a hash of (seed, purpose tag, keys...). Results never
// depend on the order in which streams are created or consumed.

namespace arwlab::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Folds the keys into the seed. Distinct key sequences give unrelated values.
constexpr std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC908ULL);
    for (std::uint64_t k : keys) {
        h = splitmix64(h ^ splitmix64(k + 0x3C6EF372FE94F82BULL));
    }
    return h;
}

// Purpose tags keep substreams of different subsystems disjoint.
enum class Tag : std::uint64_t {
    occupation = 1,
    arw = 2,
    stacks = 3,
    explorer = 4,
    independent_walk = 5,
    monte_carlo = 6,
    ordering = 7,
    trial = 8,
    campaign = 9,
};

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr explicit Stream(std::uint64_t state) noexcept : state_(state) {}

    Stream(std::uint64_t seed, Tag tag, std::initializer_list<std::uint64_t> keys = {}) noexcept
        : state_(derive(seed ^ static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL, keys)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer in [0, n) by rejection (unbiased).
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

} // namespace arwlab::rng
