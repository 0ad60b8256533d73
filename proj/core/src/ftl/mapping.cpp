#include "ssdtee/ftl/mapping.hpp"

#include "ssdtee/error.hpp"

namespace ssdtee::ftl {

MappingCache::MappingCache(std::uint64_t capacity_frames) : capacity_(capacity_frames) {
    if (capacity_ == 0) {
        throw ConfigError("mapping cache needs at least one frame");
    }
}

bool MappingCache::lookup(std::uint64_t frame) {
    auto it = index_.find(frame);
    if (it == index_.end()) {
        ++misses_;
        return false;
    }
    ++hits_;
    order_.splice(order_.begin(), order_, it->second);
    return true;
}

void MappingCache::install(std::uint64_t frame) {
    if (auto it = index_.find(frame); it != index_.end()) {
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    if (order_.size() >= capacity_) {
        index_.erase(order_.back());
        order_.pop_back();
        ++evictions_;
    }
    order_.push_front(frame);
    index_[frame] = order_.begin();
}

void MappingCache::reset() {
    order_.clear();
    index_.clear();
    hits_ = misses_ = evictions_ = 0;
}

} // namespace ssdtee::ftl
