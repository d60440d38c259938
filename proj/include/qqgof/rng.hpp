#pragma once

#include <cstdint>
#include <random>

namespace qqgof {

/// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` derived from a master seed. Streams with different
/// indices (or different master seeds) are statistically independent.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Deterministic 64-bit generator with a portable uniform(0,1) mapping.
///
/// std::uniform_real_distribution is implementation-defined, so the mapping
/// from raw bits to doubles is done here to keep draws identical across
/// standard libraries.
class SeededGenerator {
public:
    using result_type = std::uint64_t;

    explicit SeededGenerator(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform draw on the open interval (0, 1).
    double uniform() {
        constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
        return (static_cast<double>(engine_() >> 11) + 0.5) * scale;
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace qqgof
