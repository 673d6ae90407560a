#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace banditrl {

// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over the label bytes.
constexpr std::uint64_t hash_label(std::string_view label) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive the seed of a named child stream. Pure function of (seed, label, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                    std::uint64_t index = 0) noexcept
{
    return mix64(mix64(seed ^ hash_label(label)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// Reproducible random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so all
/// variates are produced here from raw engine output to stay bit-identical
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

    /// Child stream; does not advance this stream.
    [[nodiscard]] Rng split(std::string_view label, std::uint64_t index = 0) const
    {
        return Rng(derive_seed(seed_material(), label, index));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (one variate per call, no caching).
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    // Snapshot of the engine used as the parent identity for split().
    std::uint64_t seed_material() const
    {
        auto copy = engine_;
        return copy();
    }

    std::mt19937_64 engine_;
};

}  // namespace banditrl
