#pragma once

#include <cstdint>

namespace flarekit {

/// Counter-based generator: the n-th draw is a pure function of (seed, n),
/// so results do not depend on the platform's <random> implementation.
/// The mixing function is SplitMix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on [lo, hi); returns lo when the range is a point (a draw is
    /// consumed either way).
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (one draw per call, two uniforms consumed).
    double normal();

    /// Seed for work item `index` of a job seeded with `seed`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace flarekit
