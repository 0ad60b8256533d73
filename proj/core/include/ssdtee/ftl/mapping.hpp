#pragma once

#include "ssdtee/types.hpp"

#include <cstdint>
#include <list>
#include <unordered_map>

namespace ssdtee::ftl {

/// 8-byte mapping record: PPA in bits 0..39, owner TEE id in bits 40..47,
/// valid at bit 48, read_only at bit 49. Remaining bits reserved (zero).
class MappingEntry {
public:
    static constexpr std::uint64_t kPpaMask = (std::uint64_t{1} << 40) - 1;
    static constexpr int kTeeShift = 40;
    static constexpr std::uint64_t kValidBit = std::uint64_t{1} << 48;
    static constexpr std::uint64_t kReadOnlyBit = std::uint64_t{1} << 49;

    constexpr MappingEntry() = default;
    static constexpr MappingEntry from_raw(std::uint64_t raw) noexcept {
        MappingEntry e;
        e.raw_ = raw;
        return e;
    }
    static constexpr MappingEntry make(Ppa ppa, TeeId owner, bool valid, bool read_only = false) noexcept {
        MappingEntry e;
        e.set_ppa(ppa);
        e.set_tee_id(owner);
        e.set_valid(valid);
        e.set_read_only(read_only);
        return e;
    }

    [[nodiscard]] constexpr std::uint64_t raw() const noexcept { return raw_; }
    [[nodiscard]] constexpr Ppa ppa() const noexcept { return Ppa{raw_ & kPpaMask}; }
    [[nodiscard]] constexpr TeeId tee_id() const noexcept {
        return TeeId{static_cast<std::uint8_t>(raw_ >> kTeeShift)};
    }
    [[nodiscard]] constexpr bool valid() const noexcept { return (raw_ & kValidBit) != 0; }
    [[nodiscard]] constexpr bool read_only() const noexcept { return (raw_ & kReadOnlyBit) != 0; }

    constexpr void set_ppa(Ppa p) noexcept { raw_ = (raw_ & ~kPpaMask) | (p.value & kPpaMask); }
    constexpr void set_tee_id(TeeId t) noexcept {
        raw_ = (raw_ & ~(std::uint64_t{0xff} << kTeeShift)) | (std::uint64_t{t.value} << kTeeShift);
    }
    constexpr void set_valid(bool v) noexcept { raw_ = v ? (raw_ | kValidBit) : (raw_ & ~kValidBit); }
    constexpr void set_read_only(bool v) noexcept { raw_ = v ? (raw_ | kReadOnlyBit) : (raw_ & ~kReadOnlyBit); }

    friend constexpr bool operator==(MappingEntry, MappingEntry) = default;

private:
    std::uint64_t raw_ = 0;
};

static_assert(sizeof(MappingEntry) == 8);

/// Allow iff the requester owns the entry or is the FTL.
[[nodiscard]] constexpr bool check_permission(MappingEntry entry, TeeId requester) noexcept {
    return requester.is_ftl() || entry.tee_id() == requester;
}

/// LRU set of resident mapping-table frames (one frame = one flash page of
/// entries).
class MappingCache {
public:
    explicit MappingCache(std::uint64_t capacity_frames);

    /// Records a hit or miss; a hit refreshes recency.
    bool lookup(std::uint64_t frame);
    /// Makes the frame resident, evicting the least recently used if full.
    void install(std::uint64_t frame);
    void reset();

    [[nodiscard]] bool resident(std::uint64_t frame) const { return index_.contains(frame); }
    [[nodiscard]] std::uint64_t capacity_frames() const noexcept { return capacity_; }
    [[nodiscard]] std::uint64_t size() const noexcept { return order_.size(); }
    [[nodiscard]] std::uint64_t hits() const noexcept { return hits_; }
    [[nodiscard]] std::uint64_t misses() const noexcept { return misses_; }
    [[nodiscard]] std::uint64_t evictions() const noexcept { return evictions_; }

private:
    std::uint64_t capacity_;
    std::list<std::uint64_t> order_; // front = most recent
    std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> index_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
    std::uint64_t evictions_ = 0;
};

} // namespace ssdtee::ftl
