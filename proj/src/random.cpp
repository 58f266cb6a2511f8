#include "skipstep/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skipstep {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::uint32_t kKeyedDomain = 0x80000000u;

std::array<std::uint32_t, 2> key_of(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// 53-bit uniform in (0, 1].
double open_left_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// 53-bit uniform in [0, 1).
double closed_left_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

// Box-Muller on one block: two standard normals.
std::array<double, 2> box_muller(const std::array<std::uint32_t, 4>& block) {
    const double u1 = open_left_unit(join(block[0], block[1]));
    const double u2 = closed_left_unit(join(block[2], block[3]));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RandomSource::RandomSource(std::uint64_t seed, std::uint32_t stream)
    : seed_(seed), stream_(stream & ~kKeyedDomain) {}

std::array<std::uint32_t, 4> RandomSource::next_block() {
    const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_),
                                              static_cast<std::uint32_t>(block_ >> 32), stream_, 0u};
    ++block_;
    return philox4x32(ctr, key_of(seed_));
}

std::uint64_t RandomSource::next_u64() {
    if (pending_words_ < 2) {
        pending_ = next_block();
        pending_words_ = 4;
    }
    const int i = 4 - pending_words_;
    pending_words_ -= 2;
    return join(pending_[i], pending_[i + 1]);
}

double RandomSource::uniform() { return closed_left_unit(next_u64()); }

std::int64_t RandomSource::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % span;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return lo + static_cast<std::int64_t>(x % span);
}

double RandomSource::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const auto pair = box_muller(next_block());
    spare_normal_ = pair[1];
    has_spare_ = true;
    return pair[0];
}

double RandomSource::keyed_normal(std::uint64_t sample, std::uint32_t slot,
                                  std::uint32_t component) const {
    const std::array<std::uint32_t, 4> ctr = {component / 2, slot, static_cast<std::uint32_t>(sample),
                                              kKeyedDomain | stream_};
    const auto pair = box_muller(philox4x32(ctr, key_of(seed_)));
    return pair[component % 2];
}

RandomSource RandomSource::split(std::uint64_t worker) const {
    return RandomSource(splitmix64(seed_ + 0x9E3779B97F4A7C15ull * (worker + 1)), stream_);
}

}  // namespace skipstep
