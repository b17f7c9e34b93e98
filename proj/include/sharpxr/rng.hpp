#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace sharpxr {

// Stable 64-bit mixing used to derive independent streams from a root seed.
// The values are fixed by the algorithm, so derived seeds are identical on
// every platform and build.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

// Seed for the stream identified by (purpose, indices...).
std::uint64_t derive_seed(std::string_view purpose, std::initializer_list<std::uint64_t> indices);

// Thin wrapper over mt19937_64. The engine output sequence is fixed by the
// standard; uniform and normal draws are implemented here instead of through
// <random> distributions, whose results vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi);

    // Standard normal (Marsaglia polar method).
    double normal();

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sharpxr
