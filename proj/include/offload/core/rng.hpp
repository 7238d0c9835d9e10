#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace offload::core {

/// Deterministic random source. Doubles come straight from the mt19937_64
/// bit stream (not std::uniform_real_distribution) so sequences are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, hi).
    double uniform(double hi) { return next_double() * hi; }

    /// Standard normal via Box-Muller (no cached spare; two draws per call).
    double next_gaussian();

    /// Lognormal with the given mean and coefficient of variation.
    /// cv == 0 degenerates to exactly `mean`.
    double lognormal(double mean, double cv);

private:
    std::mt19937_64 engine_;
};

/// Combine a base seed with a label so independent components get
/// independent, reproducible streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

}  // namespace offload::core
