// SPDX-License-Identifier: MIT
//
// Explicitly seeded random streams.
//
// Stream-splitting rule: the engine for (seed, stream) is a std::mt19937_64
// seeded through std::seed_seq with the four 32-bit words
//   { low(seed), high(seed), low(stream), high(stream) }.
// Work that runs in parallel owns one stream per chunk, so the output depends
// on (seed, chunk size) and never on the number of threads.
#pragma once

#include <cstdint>
#include <random>

namespace svdnf {

using Engine = std::mt19937_64;

[[nodiscard]] inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream & 0xffffffffu),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Engine(seq);
}

/// Derives a child seed; used where a study needs one seed per trial.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Reserved stream ids. Chunk streams use ids below kResampleStream.
inline constexpr std::uint64_t kResampleStream = 1ULL << 40;
inline constexpr std::uint64_t kInitStream = (1ULL << 40) + 1;

/// Engine plus the distribution objects drawn from it. Distribution objects
/// carry state (the polar normal caches a second deviate), so they live with
/// the engine for reproducibility.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) : eng_(make_engine(seed, stream)) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    double exponential() { return exponential_(eng_); }

    unsigned poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        return std::poisson_distribution<unsigned>(mean)(eng_);
    }

    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(eng_);
    }

    Engine& engine() noexcept { return eng_; }

private:
    Engine eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace svdnf
