#pragma once

#include <cstddef>
#include <cstdint>

namespace evpipe::rng {

/// SplitMix64 step function (Steele, Lea, Flood 2014). Used both as the
/// seed-derivation hash and as the per-stream generator so every draw in
/// the toolkit is reproducible across platforms and standard libraries.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic 64-bit PRNG with a single word of state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double next_double_open() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v >= threshold) return v % n;
        }
    }

    bool next_bool() noexcept { return (next_u64() >> 63) != 0; }

private:
    std::uint64_t state_;
};

/// Per-sample stream seed: every batch stage derives its randomness from
/// this value so samples can be processed in any order on any number of
/// workers without changing the output.
constexpr std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t sample_id) noexcept {
    return splitmix64(base_seed ^ sample_id);
}

/// Domain salts keep the per-sample streams for independent decisions
/// (noise level, noise events, geometric transform) uncorrelated.
inline constexpr std::uint64_t kNoiseEventSalt = 0x6E6F697365ULL;   // "noise"
inline constexpr std::uint64_t kTransformSalt = 0x7472616E73ULL;    // "trans"

/// FNV-1a 64-bit hash; stable sample ids from dataset-relative paths.
constexpr std::uint64_t fnv1a64(const char* data, std::size_t size) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace evpipe::rng
