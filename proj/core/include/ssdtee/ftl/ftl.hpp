#pragma once

#include "ssdtee/flash/flash_store.hpp"
#include "ssdtee/ftl/mapping.hpp"
#include "ssdtee/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ssdtee::ftl {

struct GcConfig {
    /// GC runs while free blocks < max(2, ceil(watermark * total_blocks)).
    double free_block_low_watermark = 0.05;
    void validate() const;
};

struct FtlConfig {
    GcConfig gc;
    /// Mapping-cache size as a fraction of the full table.
    double cache_fraction = 1.0 / 16.0;
    /// Explicit cache size in entries; overrides cache_fraction when nonzero.
    std::uint64_t cache_entries = 0;
    std::uint32_t entries_per_frame = 512;
    /// Logical pages exposed; zero means one per physical page. May exceed
    /// the physical count, in which case writes eventually hit DeviceFull.
    std::uint64_t logical_pages = 0;
    void validate() const;
};

enum class ServicedFrom : std::uint8_t { Cache, SecureWorld };

struct Translation {
    Ppa ppa;
    ServicedFrom from = ServicedFrom::Cache;
    /// Nominal service time: one protected-region DRAM access on a hit; two
    /// world switches plus a mapping-page flash read on a miss.
    Duration latency = 0;
    std::uint64_t frame = 0;
};

struct GcResult {
    std::uint64_t blocks_erased = 0;
    std::uint64_t pages_migrated = 0;
    Duration time_spent = 0;
};

struct OwnershipConflict {
    Lpa lpa;
    TeeId owner;
};

struct SetIdResult {
    std::uint64_t updated = 0;
    std::vector<OwnershipConflict> conflicts;
};

/// Page-mapped FTL with TEE-ID permission bits, greedy GC and erase-count
/// aware block allocation.
///
/// Host writes stripe round-robin across (die, plane) write points with the
/// channel varying fastest, so consecutive LPAs land on consecutive
/// channels. GC relocates into its own active block.
class Ftl {
public:
    Ftl(flash::FlashStore& flash, FtlConfig config = {});

    [[nodiscard]] std::uint64_t logical_pages() const noexcept { return logical_pages_; }
    [[nodiscard]] MappingEntry entry(Lpa lpa) const;
    [[nodiscard]] std::uint64_t frame_of(Lpa lpa) const noexcept { return lpa.value / config_.entries_per_frame; }
    /// Die holding a mapping-table frame.
    [[nodiscard]] std::uint64_t frame_die(std::uint64_t frame) const noexcept { return frame % geometry().dies(); }

    /// Throws PermissionDenied or UnmappedLpa; hit/miss counted either way.
    Translation translate(Lpa lpa, TeeId requester);

    SetIdResult set_id_bits(std::span<const Lpa> lpas, TeeId tee, bool read_only = false);
    /// Returns entries owned by `tee` to the FTL.
    std::uint64_t clear_id_bits(std::span<const Lpa> lpas, TeeId tee);

    /// State-only out-of-place write (bulk load, GC bookkeeping); returns
    /// the new PPA. Throws PermissionDenied or DeviceFull.
    Ppa write_lpa_untimed(Lpa lpa, flash::PageData data, TeeId tee);
    /// Timed write: any GC burst occupies the victim dies, then the page is
    /// programmed. `done` receives the program completion time.
    Ppa write_lpa(Lpa lpa, flash::PageData data, TeeId tee, flash::FlashStore::Done done);

    [[nodiscard]] bool need_gc() const noexcept;
    GcResult collect_garbage();
    /// Closed block with the fewest valid pages (ties: fewest erases, then
    /// lowest index); fully valid blocks are never chosen.
    [[nodiscard]] std::optional<std::uint64_t> pick_victim() const;

    /// Stored content for a mapped LPA (no timing, no permission check).
    [[nodiscard]] flash::PageData read_lpa(Lpa lpa) const;

    /// Empty string when the mapping is sound, else the first violation.
    [[nodiscard]] std::string audit() const;

    MappingCache& cache() noexcept { return cache_; }
    [[nodiscard]] const MappingCache& cache() const noexcept { return cache_; }
    [[nodiscard]] std::uint64_t translations() const noexcept { return translations_; }
    [[nodiscard]] std::uint64_t free_blocks() const noexcept { return free_blocks_; }
    [[nodiscard]] std::uint64_t gc_threshold() const noexcept { return gc_threshold_; }
    [[nodiscard]] const GcResult& gc_totals() const noexcept { return gc_totals_; }
    [[nodiscard]] std::uint64_t host_writes() const noexcept { return host_writes_; }
    [[nodiscard]] const flash::FlashGeometry& geometry() const noexcept { return flash_.geometry(); }
    [[nodiscard]] flash::FlashStore& flash() noexcept { return flash_; }

private:
    struct Unit {
        std::uint64_t first_block = 0;
        std::uint64_t fresh_next = 0; // offset of the next never-used block
        std::uint64_t fresh_end = 0;
        std::set<std::pair<std::uint32_t, std::uint64_t>> recycled; // (erase count, block)
        std::optional<std::uint64_t> active;
    };

    MappingEntry& slot(Lpa lpa);
    [[nodiscard]] bool unit_has_free_block(const Unit& u) const noexcept;
    std::uint64_t take_block(Unit& u);
    std::optional<std::uint64_t> take_block_global();
    std::optional<Ppa> allocate_host();
    std::optional<Ppa> allocate_gc();
    void place(Lpa lpa, Ppa ppa, flash::PageData data);
    void release_block(std::uint64_t block);
    void check_write(Lpa lpa, TeeId tee) const;

    flash::FlashStore& flash_;
    FtlConfig config_;
    std::uint64_t logical_pages_;
    std::vector<std::unique_ptr<MappingEntry[]>> table_;
    MappingCache cache_;
    std::vector<Unit> units_;
    std::vector<std::uint64_t> unit_order_; // round-robin order, channel fastest
    std::uint64_t rr_ = 0;
    std::optional<std::uint64_t> gc_active_;
    std::set<std::uint64_t> closed_;
    std::uint64_t free_blocks_ = 0;
    std::uint64_t gc_threshold_ = 0;
    std::uint64_t translations_ = 0;
    std::uint64_t host_writes_ = 0;
    GcResult gc_totals_;
};

} // namespace ssdtee::ftl
