#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ssdtee::cipher {

/// 80-bit key or IV as ten bytes. Bit order follows the eSTREAM reference
/// code: the first state bit is the MSB of byte 9, and keystream bit z1 lands
/// in the LSB of output byte 0.
using Block80 = std::array<std::uint8_t, 10>;

/// Bit-serial Trivium, one state bit per array element. Slow; kept as the
/// oracle the fast path is checked against.
class ReferenceTrivium {
public:
    ReferenceTrivium(const Block80& key, const Block80& iv);

    std::uint8_t next_bit();
    void generate(std::span<std::uint8_t> out);

private:
    std::array<std::uint8_t, 289> s_{}; // s_[1..288]
};

/// Trivium producing 64 keystream bits per step. The shortest feedback tap
/// is 66 positions deep, so 64 consecutive steps are independent.
class Trivium {
public:
    static constexpr int kWarmupSteps = 4 * 288;

    Trivium(const Block80& key, const Block80& iv);

    /// Next 64 keystream bits; bit t is z_{t+1} of this chunk.
    std::uint64_t next_word();
    /// Fills `out` with keystream bytes.
    void generate(std::span<std::uint8_t> out);
    /// out = in XOR keystream. `in` and `out` may alias.
    void apply(std::span<const std::uint8_t> in, std::span<std::uint8_t> out);

private:
    using u128 = unsigned __int128;
    // Each register is stored with state position p at bit (n - p).
    u128 a_ = 0; // s1..s93
    u128 b_ = 0; // s94..s177
    u128 c_ = 0; // s178..s288
    std::uint64_t pending_ = 0;
    int pending_bytes_ = 0;
};

/// Convenience: first n keystream bytes for (key, iv).
[[nodiscard]] std::vector<std::uint8_t> keystream(const Block80& key, const Block80& iv, std::size_t n);

} // namespace ssdtee::cipher
