#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace ssdtee {

/// Simulated time in nanoseconds.
using SimTime = std::uint64_t;
/// A span of simulated time in nanoseconds.
using Duration = std::uint64_t;

/// Logical page address.
struct Lpa {
    std::uint64_t value = 0;
    friend constexpr auto operator<=>(Lpa, Lpa) = default;
};

/// Packed physical page address: flat index over
/// (channel, chip, die, plane, block, page), page varying fastest.
struct Ppa {
    std::uint64_t value = 0;
    friend constexpr auto operator<=>(Ppa, Ppa) = default;
};

/// TEE identifier stored in mapping entries. Zero is the FTL itself.
struct TeeId {
    std::uint8_t value = 0;
    friend constexpr auto operator<=>(TeeId, TeeId) = default;
    [[nodiscard]] constexpr bool is_ftl() const noexcept { return value == 0; }
};

inline constexpr TeeId kFtlTeeId{0};

/// Ceiling division for positive integers.
constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept {
    return (a + b - 1) / b;
}

/// Nanoseconds needed to move `bytes` at `bytes_per_s`, rounded up.
constexpr Duration transfer_ns(std::uint64_t bytes, std::uint64_t bytes_per_s) noexcept {
    // bytes * 1e9 stays below 2^64 for anything up to ~18 GB per transfer.
    return ceil_div(bytes * 1'000'000'000ULL, bytes_per_s);
}

} // namespace ssdtee

template <>
struct std::hash<ssdtee::Lpa> {
    std::size_t operator()(ssdtee::Lpa l) const noexcept { return std::hash<std::uint64_t>{}(l.value); }
};
template <>
struct std::hash<ssdtee::Ppa> {
    std::size_t operator()(ssdtee::Ppa p) const noexcept { return std::hash<std::uint64_t>{}(p.value); }
};
