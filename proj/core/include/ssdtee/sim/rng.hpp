#pragma once

#include <cstdint>
#include <random>

namespace ssdtee::sim {

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 has a fully specified output sequence; the standard
/// distributions do not, so bounded draws use a multiply-shift reduction.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, bound). bound == 0 returns 0.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) {
            return 0;
        }
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * bound) >> 64);
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Independent child stream; same parent state and tag give the same child.
    [[nodiscard]] Rng fork(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag + 0x9e3779b97f4a7c15ULL))); }

    /// SplitMix64 finalizer.
    static constexpr std::uint64_t mix(std::uint64_t x) noexcept {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace ssdtee::sim
