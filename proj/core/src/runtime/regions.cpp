#include "ssdtee/runtime/regions.hpp"

#include "ssdtee/error.hpp"
#include "ssdtee/types.hpp"

#include <stdexcept>
#include <string>

namespace ssdtee::runtime {

void RegionConfig::validate() const {
    if (dram_bytes == 0 || protected_bytes == 0 || secure_bytes == 0) {
        throw ConfigError("every DRAM region needs a nonzero size");
    }
    if (protected_bytes + secure_bytes >= dram_bytes) {
        throw ConfigError("protected and secure regions leave no normal memory");
    }
}

MemoryRegionMap::MemoryRegionMap(const RegionConfig& cfg) : capacity_(cfg.dram_bytes) {
    cfg.validate();
    const std::uint64_t normal_end = cfg.dram_bytes - cfg.protected_bytes - cfg.secure_bytes;
    normal_ = {0, normal_end};
    protected_ = {normal_end, normal_end + cfg.protected_bytes};
    secure_ = {protected_.end, cfg.dram_bytes};
}

RegionAllocator::RegionAllocator(ByteRange region, std::uint64_t align) : region_(region), align_(align) {
    if (align == 0 || region.begin % align != 0) {
        throw ConfigError("allocator region must be aligned");
    }
    const std::uint64_t end = region.end - region.end % align;
    if (end > region.begin) {
        free_.emplace(region.begin, end);
        free_bytes_ = end - region.begin;
    }
}

std::optional<ByteRange> RegionAllocator::allocate(std::uint64_t bytes) {
    if (bytes == 0) {
        return ByteRange{region_.begin, region_.begin};
    }
    const std::uint64_t need = ceil_div(bytes, align_) * align_;
    for (auto it = free_.begin(); it != free_.end(); ++it) {
        if (it->second - it->first >= need) {
            const ByteRange r{it->first, it->first + need};
            const std::uint64_t end = it->second;
            free_.erase(it);
            if (r.end < end) {
                free_.emplace(r.end, end);
            }
            free_bytes_ -= need;
            return r;
        }
    }
    return std::nullopt;
}

void RegionAllocator::release(const ByteRange& r) {
    if (r.empty()) {
        return;
    }
    if (!region_.contains(r) || r.begin % align_ != 0 || r.end % align_ != 0) {
        throw std::invalid_argument("release of a range the allocator never handed out");
    }
    auto next = free_.lower_bound(r.begin);
    if (next != free_.end() && next->first < r.end) {
        throw std::invalid_argument("double release at " + std::to_string(r.begin));
    }
    std::uint64_t begin = r.begin;
    std::uint64_t end = r.end;
    if (next != free_.begin()) {
        auto prev = std::prev(next);
        if (prev->second > begin) {
            throw std::invalid_argument("double release at " + std::to_string(r.begin));
        }
        if (prev->second == begin) {
            begin = prev->first;
            free_.erase(prev);
        }
    }
    if (next != free_.end() && next->first == end) {
        end = next->second;
        free_.erase(next);
    }
    free_.emplace(begin, end);
    free_bytes_ += r.size();
}

std::uint64_t RegionAllocator::largest_free() const noexcept {
    std::uint64_t best = 0;
    for (const auto& [b, e] : free_) {
        best = std::max(best, e - b);
    }
    return best;
}

} // namespace ssdtee::runtime
