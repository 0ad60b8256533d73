#pragma once

#include <cstdint>
#include <map>
#include <optional>

namespace ssdtee::runtime {

/// Half-open byte range [begin, end).
struct ByteRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    [[nodiscard]] constexpr std::uint64_t size() const noexcept { return end - begin; }
    [[nodiscard]] constexpr bool empty() const noexcept { return end <= begin; }
    [[nodiscard]] constexpr bool contains(const ByteRange& o) const noexcept { return o.begin >= begin && o.end <= end; }
    [[nodiscard]] constexpr bool overlaps(const ByteRange& o) const noexcept { return begin < o.end && o.begin < end; }
    friend constexpr bool operator==(const ByteRange&, const ByteRange&) = default;
};

struct RegionConfig {
    std::uint64_t dram_bytes = 4ULL << 30;
    /// Hosts the mapping cache; TEEs may read it but never write.
    std::uint64_t protected_bytes = 128ULL << 20;
    /// FTL state and TEE metadata.
    std::uint64_t secure_bytes = 64ULL << 20;

    void validate() const;
};

/// SSD DRAM split into normal (TEE heaps and buffers), protected and secure
/// regions, laid out in that order from address zero.
class MemoryRegionMap {
public:
    explicit MemoryRegionMap(const RegionConfig& cfg = {});

    [[nodiscard]] const ByteRange& normal() const noexcept { return normal_; }
    [[nodiscard]] const ByteRange& protected_region() const noexcept { return protected_; }
    [[nodiscard]] const ByteRange& secure() const noexcept { return secure_; }
    [[nodiscard]] std::uint64_t capacity() const noexcept { return capacity_; }

private:
    ByteRange normal_;
    ByteRange protected_;
    ByteRange secure_;
    std::uint64_t capacity_ = 0;
};

/// First-fit allocator over one region, page aligned, with coalescing.
class RegionAllocator {
public:
    explicit RegionAllocator(ByteRange region, std::uint64_t align = 4096);

    std::optional<ByteRange> allocate(std::uint64_t bytes);
    void release(const ByteRange& r);

    [[nodiscard]] std::uint64_t free_bytes() const noexcept { return free_bytes_; }
    [[nodiscard]] std::uint64_t largest_free() const noexcept;
    [[nodiscard]] const ByteRange& region() const noexcept { return region_; }

private:
    ByteRange region_;
    std::uint64_t align_;
    std::map<std::uint64_t, std::uint64_t> free_; // begin -> end
    std::uint64_t free_bytes_ = 0;
};

} // namespace ssdtee::runtime
