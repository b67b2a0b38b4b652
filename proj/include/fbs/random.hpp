#pragma once
// Seedable, splittable random streams. A stream for run `i` of a campaign is
// derived from (master_seed, i) only, so results do not depend on how runs
// are scheduled across workers.

#include <cstdint>
#include <random>

namespace fbs {

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Independent child stream; derive(s, i) is a pure function of (s, i).
    static RandomStream derive(std::uint64_t master_seed, std::uint64_t index) {
        return RandomStream(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double normal() { return normal_(engine_); }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fbs
