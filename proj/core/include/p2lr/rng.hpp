#pragma once

#include <cstdint>
#include <random>

namespace p2lr {

/// Seeded generator with portable distributions.
///
/// `std::normal_distribution` and friends are implementation-defined, so
/// the variates here are derived directly from the raw `std::mt19937_64`
/// stream (which the standard pins bit-for-bit). Same seed, same numbers,
/// on every conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// Derive an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace p2lr
