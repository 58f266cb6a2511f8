#pragma once

#include <array>
#include <cstdint>

namespace skipstep {

/// Philox4x32-10 counter-based block cipher (the Random123 generator).
/// Maps a 128-bit counter and 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Deterministic random source, generator version "philox4x32-10/box-muller v1".
///
/// Two independent draw domains share one seed:
///  - sequential draws (`normal()`, `uniform()`, ...) advance an internal block
///    counter; identical seed and call sequence give bit-identical values.
///  - keyed draws (`keyed_normal`) are a pure function of
///    (seed, stream, sample, slot, component) and never touch the counter.
///    Samplers use them so that the noise added at plan step k to sample i is
///    the same regardless of batch partitioning or how many draws other
///    samplers consume.
///
/// Gaussian transform: one Philox block yields two 53-bit uniforms
/// u1 in (0, 1], u2 in [0, 1); Box-Muller gives sqrt(-2 ln u1) * (cos, sin)(2 pi u2).
///
/// Worker derivation: `split(k)` returns a source whose seed is
/// splitmix64(seed + 0x9E3779B97F4A7C15 * (k + 1)), same stream.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint32_t stream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint32_t stream() const { return stream_; }

    double normal();
    // In [0, 1).
    double uniform();
    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    std::uint64_t next_u64();

    double keyed_normal(std::uint64_t sample, std::uint32_t slot, std::uint32_t component) const;

    RandomSource split(std::uint64_t worker) const;

private:
    std::array<std::uint32_t, 4> next_block();

    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> pending_{};
    int pending_words_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace skipstep
