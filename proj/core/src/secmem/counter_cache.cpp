#include "ssdtee/secmem/counter_cache.hpp"

#include "ssdtee/error.hpp"
#include "ssdtee/sim/rng.hpp"

namespace ssdtee::secmem {

CounterCache::CounterCache(std::uint64_t capacity_bytes, std::uint32_t ways, std::uint32_t line_bytes)
    : ways_(ways), line_bytes_(line_bytes) {
    if (ways == 0 || line_bytes == 0 || capacity_bytes < std::uint64_t{ways} * line_bytes ||
        capacity_bytes % (std::uint64_t{ways} * line_bytes) != 0) {
        throw ConfigError("counter cache capacity must be a positive multiple of ways x line size");
    }
    sets_ = capacity_bytes / (std::uint64_t{ways} * line_bytes);
    lines_.resize(sets_ * ways_);
}

std::uint64_t CounterCache::set_of(std::uint64_t key) const noexcept { return sim::Rng::mix(key) % sets_; }

bool CounterCache::contains(std::uint64_t key) const {
    const std::uint64_t base = set_of(key) * ways_;
    for (std::uint32_t w = 0; w < ways_; ++w) {
        const Line& l = lines_[base + w];
        if (l.valid && l.key == key) {
            return true;
        }
    }
    return false;
}

CounterCache::Outcome CounterCache::access(std::uint64_t key, bool dirty) {
    Outcome out;
    const std::uint64_t base = set_of(key) * ways_;
    ++clock_;
    Line* victim = nullptr;
    for (std::uint32_t w = 0; w < ways_; ++w) {
        Line& l = lines_[base + w];
        if (l.valid && l.key == key) {
            l.stamp = clock_;
            l.dirty = l.dirty || dirty;
            ++hits_;
            out.hit = true;
            return out;
        }
        if (victim == nullptr || (!l.valid && victim->valid) || (l.valid == victim->valid && l.stamp < victim->stamp)) {
            victim = &l;
        }
    }
    ++misses_;
    if (victim->valid) {
        if (victim->dirty) {
            out.dirty_victim = victim->key;
        }
    } else {
        ++resident_;
    }
    *victim = Line{key, clock_, true, dirty};
    return out;
}

void CounterCache::clear() {
    for (auto& l : lines_) {
        l = Line{};
    }
    resident_ = 0;
    hits_ = misses_ = 0;
}

} // namespace ssdtee::secmem
