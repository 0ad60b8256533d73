#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace ssdtee::secmem {

/// Set-associative LRU cache of 64-byte metadata lines (counter lines,
/// split-counter blocks and tree nodes) with dirty tracking.
class CounterCache {
public:
    struct Outcome {
        bool hit = false;
        /// Key of a dirty line evicted to make room, if any.
        std::optional<std::uint64_t> dirty_victim;
    };

    CounterCache(std::uint64_t capacity_bytes, std::uint32_t ways, std::uint32_t line_bytes = 64);

    /// Looks the line up, filling it on a miss. `dirty` marks it modified.
    Outcome access(std::uint64_t key, bool dirty);
    [[nodiscard]] bool contains(std::uint64_t key) const;
    void clear();

    [[nodiscard]] std::uint64_t hits() const noexcept { return hits_; }
    [[nodiscard]] std::uint64_t misses() const noexcept { return misses_; }
    [[nodiscard]] std::uint64_t resident_lines() const noexcept { return resident_; }
    [[nodiscard]] std::uint64_t capacity_lines() const noexcept { return lines_.size(); }
    [[nodiscard]] std::uint32_t line_bytes() const noexcept { return line_bytes_; }

private:
    struct Line {
        std::uint64_t key = 0;
        std::uint64_t stamp = 0;
        bool valid = false;
        bool dirty = false;
    };

    [[nodiscard]] std::uint64_t set_of(std::uint64_t key) const noexcept;

    std::uint32_t ways_;
    std::uint32_t line_bytes_;
    std::uint64_t sets_;
    std::vector<Line> lines_;
    std::uint64_t clock_ = 0;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
    std::uint64_t resident_ = 0;
};

} // namespace ssdtee::secmem
