#pragma once

#include "ssdtee/flash/geometry.hpp"
#include "ssdtee/sim/kernel.hpp"
#include "ssdtee/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace ssdtee::flash {

enum class PageStatus : std::uint8_t { Free, Valid, Invalid };

struct PageState {
    PageStatus status = PageStatus::Free;
    std::optional<Lpa> owner;
    std::uint64_t digest = 0;
};

/// Page payload. `bytes` is populated only in faithful mode; the digest
/// always identifies the content.
struct PageData {
    std::uint64_t digest = 0;
    std::vector<std::uint8_t> bytes;
};

/// 64-bit content digest used for pages stored without their bytes.
[[nodiscard]] std::uint64_t content_digest(std::span<const std::uint8_t> bytes) noexcept;

struct BlockInfo {
    std::uint32_t next_page = 0;
    std::uint32_t valid = 0;
    std::uint32_t invalid = 0;
    std::uint32_t erase_count = 0;
};

/// NAND array state plus die/channel timing.
///
/// State checks and transitions happen when an operation is issued; the
/// completion callback fires once the die and channel resources have been
/// held for the operation's latency. Reads hold the die for t_rd then the
/// channel for the transfer; programs use the channel first, then the die.
class FlashStore {
public:
    using ReadDone = std::function<void(SimTime completion, const PageData& data)>;
    using Done = std::function<void(SimTime completion)>;

    FlashStore(sim::Kernel& kernel, const FlashGeometry& geometry, const LatencyConfig& latency,
               bool faithful = false);

    [[nodiscard]] const FlashGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] const LatencyConfig& latency() const noexcept { return latency_; }
    [[nodiscard]] const AddressCodec& codec() const noexcept { return codec_; }
    [[nodiscard]] bool faithful() const noexcept { return faithful_; }
    [[nodiscard]] Duration page_transfer_ns() const noexcept { return page_transfer_ns_; }

    void read_page(Ppa ppa, ReadDone done);
    void program_page(Ppa ppa, Lpa owner, PageData data, Done done);
    void erase_block(std::uint64_t block, Done done);
    /// Timing-only read of a controller metadata page (mapping-table pages)
    /// stored on the given die.
    void read_metadata(std::uint64_t die, Done done);

    /// Timing of a page program without touching state (the caller already
    /// applied it, e.g. through program_untimed).
    void occupy_program(Ppa ppa, Done done);
    /// Holds a die for `hold` (bookkeeping such as GC bursts).
    void occupy_die(std::uint64_t die, Duration hold, Done done);

    // State-only variants for bulk loading and bookkeeping; no time passes.
    void program_untimed(Ppa ppa, Lpa owner, PageData data);
    void erase_untimed(std::uint64_t block);
    [[nodiscard]] PageData peek(Ppa ppa) const;

    /// Marks a Valid page Invalid (its LPA moved elsewhere).
    void invalidate(Ppa ppa);

    [[nodiscard]] PageState page(Ppa ppa) const;
    [[nodiscard]] BlockInfo block(std::uint64_t block) const;

    sim::Resource& channel(std::uint32_t index) { return channels_.at(index); }
    sim::Resource& die(std::uint64_t index) { return dies_.at(index); }
    [[nodiscard]] const std::vector<sim::Resource>& channels() const noexcept { return channels_; }

    [[nodiscard]] std::uint64_t reads() const noexcept { return reads_; }
    [[nodiscard]] std::uint64_t programs() const noexcept { return programs_; }
    [[nodiscard]] std::uint64_t erases() const noexcept { return erases_; }

private:
    struct Block {
        BlockInfo info;
        std::vector<PageState> pages;
    };

    Block& touch(std::uint64_t block);
    [[nodiscard]] const Block* find(std::uint64_t block) const;
    void check_programmable(Ppa ppa) const;
    void apply_program(Ppa ppa, Lpa owner, PageData data);
    void check_readable(Ppa ppa) const;

    sim::Kernel& kernel_;
    FlashGeometry geometry_;
    LatencyConfig latency_;
    AddressCodec codec_;
    bool faithful_;
    Duration page_transfer_ns_;
    std::vector<std::unique_ptr<Block>> blocks_;
    std::unordered_map<std::uint64_t, std::vector<std::uint8_t>> payloads_;
    std::vector<sim::Resource> channels_;
    std::vector<sim::Resource> dies_;
    std::uint64_t reads_ = 0;
    std::uint64_t programs_ = 0;
    std::uint64_t erases_ = 0;
};

} // namespace ssdtee::flash
