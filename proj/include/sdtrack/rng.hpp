#pragma once

#include <cstdint>
#include <random>

namespace sdt {

/// Seedable generator with portable output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions below are implemented here rather than
/// taken from <random> because the standard distributions are free to
/// differ between library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for item `index` of a run seeded with `seed`.
    /// Sequence i gets the same stream regardless of generation order.
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi); returns lo when lo == hi.
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller (no cached second variate).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    /// Knuth multiplication method; suitable for the small rates used here.
    int poisson(double rate);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace sdt
