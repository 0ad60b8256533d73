#pragma once

#include "ssdtee/types.hpp"

#include <cstdint>

namespace ssdtee::flash {

/// Physical shape of the NAND array. Defaults give a 1 TiB device:
/// 8 channels x 4 chips x 4 dies x 2 planes x 2048 blocks x 512 pages x 4 KiB.
struct FlashGeometry {
    std::uint32_t channels = 8;
    std::uint32_t chips_per_channel = 4;
    std::uint32_t dies_per_chip = 4;
    std::uint32_t planes_per_die = 2;
    std::uint32_t blocks_per_plane = 2048;
    std::uint32_t pages_per_block = 512;
    std::uint32_t page_bytes = 4096;

    /// Throws ConfigError when any count is zero.
    void validate() const;

    [[nodiscard]] std::uint64_t dies() const noexcept {
        return std::uint64_t{channels} * chips_per_channel * dies_per_chip;
    }
    [[nodiscard]] std::uint64_t dies_per_channel() const noexcept {
        return std::uint64_t{chips_per_channel} * dies_per_chip;
    }
    [[nodiscard]] std::uint64_t blocks_per_die() const noexcept {
        return std::uint64_t{planes_per_die} * blocks_per_plane;
    }
    [[nodiscard]] std::uint64_t pages_per_die() const noexcept { return blocks_per_die() * pages_per_block; }
    [[nodiscard]] std::uint64_t total_blocks() const noexcept { return dies() * blocks_per_die(); }
    [[nodiscard]] std::uint64_t total_pages() const noexcept { return total_blocks() * pages_per_block; }
    [[nodiscard]] std::uint64_t total_bytes() const noexcept { return total_pages() * page_bytes; }
    /// Independent write points: one per (channel, chip, die, plane).
    [[nodiscard]] std::uint64_t parallel_units() const noexcept { return dies() * planes_per_die; }
};

/// Product of every geometry count times the page size.
[[nodiscard]] inline std::uint64_t total_capacity(const FlashGeometry& g) { return g.total_bytes(); }

struct PageCoordinates {
    std::uint32_t channel = 0;
    std::uint32_t chip = 0;
    std::uint32_t die = 0;
    std::uint32_t plane = 0;
    std::uint32_t block = 0;
    std::uint32_t page = 0;
    friend constexpr bool operator==(const PageCoordinates&, const PageCoordinates&) = default;
};

/// Bijection between coordinates and the flat PPA index.
class AddressCodec {
public:
    explicit AddressCodec(const FlashGeometry& g) : g_(g) {}

    [[nodiscard]] Ppa encode(const PageCoordinates& c) const;
    /// Throws std::out_of_range for an index beyond the device.
    [[nodiscard]] PageCoordinates decode(Ppa ppa) const;

    /// Flat die index (channel-major).
    [[nodiscard]] std::uint64_t die_of(Ppa ppa) const noexcept { return ppa.value / g_.pages_per_die(); }
    [[nodiscard]] std::uint32_t channel_of(Ppa ppa) const noexcept {
        return static_cast<std::uint32_t>(die_of(ppa) / g_.dies_per_channel());
    }
    /// Flat block index; blocks of one die are contiguous.
    [[nodiscard]] std::uint64_t block_of(Ppa ppa) const noexcept { return ppa.value / g_.pages_per_block; }
    [[nodiscard]] std::uint32_t page_in_block(Ppa ppa) const noexcept {
        return static_cast<std::uint32_t>(ppa.value % g_.pages_per_block);
    }
    [[nodiscard]] Ppa first_page(std::uint64_t block) const noexcept { return Ppa{block * g_.pages_per_block}; }
    [[nodiscard]] std::uint64_t die_of_block(std::uint64_t block) const noexcept { return block / g_.blocks_per_die(); }
    /// Flat (die, plane) write point of a block.
    [[nodiscard]] std::uint64_t unit_of_block(std::uint64_t block) const noexcept {
        return die_of_block(block) * g_.planes_per_die + (block % g_.blocks_per_die()) / g_.blocks_per_plane;
    }

private:
    FlashGeometry g_;
};

/// Every timing constant of the device and controller. Defaults follow the
/// simulated platform: 50/300 us read/program, 600 MB/s channels, 60 ns AES pad.
struct LatencyConfig {
    Duration t_rd_ns = 50'000;
    Duration t_wr_ns = 300'000;
    Duration t_erase_ns = 3'000'000;
    std::uint64_t channel_bw_bytes_per_s = 600'000'000;
    Duration dram_access_ns = 50;
    Duration aes_pad_ns = 60;
    Duration world_switch_ns = 3'800;
    Duration tee_create_ns = 95'000;
    Duration tee_delete_ns = 58'000;
    std::uint64_t host_link_bw_bytes_per_s = 3'200'000'000;

    /// Throws ConfigError when any field is zero.
    void validate() const;
};

} // namespace ssdtee::flash
