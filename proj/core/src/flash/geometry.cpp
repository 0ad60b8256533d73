#include "ssdtee/flash/geometry.hpp"

#include "ssdtee/error.hpp"

#include <stdexcept>
#include <string>

namespace ssdtee::flash {

void FlashGeometry::validate() const {
    auto need = [](std::uint64_t v, const char* field) {
        if (v == 0) {
            throw ConfigError(std::string("geometry.") + field + " must be >= 1");
        }
    };
    need(channels, "channels");
    need(chips_per_channel, "chips_per_channel");
    need(dies_per_chip, "dies_per_chip");
    need(planes_per_die, "planes_per_die");
    need(blocks_per_plane, "blocks_per_plane");
    need(pages_per_block, "pages_per_block");
    need(page_bytes, "page_bytes");
    if (total_pages() > (std::uint64_t{1} << 40)) {
        throw ConfigError("geometry exceeds the 40-bit physical page space");
    }
}

void LatencyConfig::validate() const {
    auto need = [](std::uint64_t v, const char* field) {
        if (v == 0) {
            throw ConfigError(std::string("latency.") + field + " must be > 0");
        }
    };
    need(t_rd_ns, "t_rd_ns");
    need(t_wr_ns, "t_wr_ns");
    need(t_erase_ns, "t_erase_ns");
    need(channel_bw_bytes_per_s, "channel_bw_bytes_per_s");
    need(dram_access_ns, "dram_access_ns");
    need(aes_pad_ns, "aes_pad_ns");
    need(world_switch_ns, "world_switch_ns");
    need(tee_create_ns, "tee_create_ns");
    need(tee_delete_ns, "tee_delete_ns");
    need(host_link_bw_bytes_per_s, "host_link_bw_bytes_per_s");
}

Ppa AddressCodec::encode(const PageCoordinates& c) const {
    std::uint64_t v = c.channel;
    v = v * g_.chips_per_channel + c.chip;
    v = v * g_.dies_per_chip + c.die;
    v = v * g_.planes_per_die + c.plane;
    v = v * g_.blocks_per_plane + c.block;
    v = v * g_.pages_per_block + c.page;
    return Ppa{v};
}

PageCoordinates AddressCodec::decode(Ppa ppa) const {
    if (ppa.value >= g_.total_pages()) {
        throw std::out_of_range("ppa " + std::to_string(ppa.value) + " beyond device");
    }
    std::uint64_t v = ppa.value;
    PageCoordinates c;
    c.page = static_cast<std::uint32_t>(v % g_.pages_per_block);
    v /= g_.pages_per_block;
    c.block = static_cast<std::uint32_t>(v % g_.blocks_per_plane);
    v /= g_.blocks_per_plane;
    c.plane = static_cast<std::uint32_t>(v % g_.planes_per_die);
    v /= g_.planes_per_die;
    c.die = static_cast<std::uint32_t>(v % g_.dies_per_chip);
    v /= g_.dies_per_chip;
    c.chip = static_cast<std::uint32_t>(v % g_.chips_per_channel);
    c.channel = static_cast<std::uint32_t>(v / g_.chips_per_channel);
    return c;
}

} // namespace ssdtee::flash
