#pragma once

#include "ssdtee/secmem/counter_cache.hpp"
#include "ssdtee/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssdtee::secmem {

enum class PageClass : std::uint8_t { ReadOnly, Writable };
enum class Tree : std::uint8_t { ReadOnly, Writable };

struct SecureMemoryConfig {
    std::uint64_t counter_cache_bytes = 131'072;
    std::uint32_t counter_cache_ways = 8;
    Duration dram_access_ns = 50;
    Duration aes_pad_ns = 60;
    Duration mac_check_ns = 40;
    /// Streaming time of one 64-byte line over the DRAM port (DDR3-1600, 64-bit).
    Duration dram_line_ns = 5;
    /// Hide pad generation behind the DRAM access.
    bool pad_overlap = false;
    /// Counter slots available to each page class.
    std::uint64_t ro_slots = 32'768;
    std::uint64_t rw_slots = 16'384;
    /// Keep ciphertext, MACs, counters and tree digests and check them on
    /// every access. Off, only timing and traffic are modeled.
    bool functional = false;
    std::uint64_t key_seed = 0x5eed;

    void validate() const;
};

inline constexpr std::uint32_t kPageBytes = 4096;
inline constexpr std::uint32_t kLineBytes = 64;
inline constexpr std::uint32_t kLinesPerPage = kPageBytes / kLineBytes;
inline constexpr std::uint32_t kMinorBits = 7;
inline constexpr std::uint32_t kMinorLimit = 1U << kMinorBits;
inline constexpr std::uint32_t kArity = 8;
inline constexpr std::uint32_t kCountersPerRoLine = 8;

/// One writable page's counters packed into exactly one 64-byte line:
/// 64-bit major in bytes 0..7, then 64 seven-bit minors (minor i at bit 7i
/// of bytes 8..63).
class SplitCounterBlock {
public:
    [[nodiscard]] std::uint64_t major() const noexcept;
    void set_major(std::uint64_t v) noexcept;
    [[nodiscard]] std::uint32_t minor(std::uint32_t line) const noexcept;
    void set_minor(std::uint32_t line, std::uint32_t v) noexcept;
    [[nodiscard]] const std::array<std::uint8_t, 64>& bytes() const noexcept { return bytes_; }
    std::array<std::uint8_t, 64>& bytes() noexcept { return bytes_; }

private:
    std::array<std::uint8_t, 64> bytes_{};
};
static_assert(sizeof(SplitCounterBlock) == 64);

struct AccessResult {
    /// dram_access_ns + encryption_ns + verification_ns.
    Duration latency = 0;
    /// Counter fetch, pad generation and any overflow re-encryption.
    Duration encryption_ns = 0;
    /// MAC check and integrity-tree fetches.
    Duration verification_ns = 0;
    std::uint64_t encryption_traffic = 0;
    std::uint64_t verification_traffic = 0;
    bool counter_hit = true;
    bool overflow = false;
    [[nodiscard]] std::uint64_t extra_traffic() const noexcept { return encryption_traffic + verification_traffic; }
};

struct TrafficReport {
    std::uint64_t demand_bytes = 0;
    std::uint64_t encryption_bytes = 0;
    std::uint64_t verification_bytes = 0;
    double encryption_extra_pct = 0.0;
    double verification_extra_pct = 0.0;
};

struct SecureMemoryStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t loads = 0;
    std::uint64_t overflows = 0;
    /// Charges of core accesses (secure_read / secure_write).
    Duration encryption_charge_ns = 0;
    Duration verification_charge_ns = 0;
    /// Charges of DMA fills (load_page), off the cores' critical path.
    Duration load_charge_ns = 0;
    /// Per core access: dram + encryption, and the full verified latency.
    Duration access_encryption_latency_ns = 0;
    Duration access_verification_latency_ns = 0;
    std::uint64_t nodes_touched_last_write = 0;
};

/// Secure in-storage DRAM: hybrid-counter encryption (major-only counters
/// for read-only pages, split counters for writable ones), a shared counter
/// cache, two arity-8 Bonsai Merkle trees over the counters with roots in
/// on-chip registers, and per-line MACs.
///
/// Pages are identified by DRAM page number. A page gets a counter slot in
/// its class's pool at first registration and keeps it, so counters (and
/// therefore pad tuples) never rewind for an address.
class SecureMemory {
public:
    explicit SecureMemory(SecureMemoryConfig config = {});

    /// Registers a page for use; input pages are ReadOnly, heap pages
    /// Writable. A writable page starts zero-filled, which counts as its
    /// first write (all minors at 1). A live page cannot change class; a
    /// released one may come back under either class.
    void register_page(std::uint64_t page, PageClass cls);
    void release_page(std::uint64_t page);
    /// Throws std::out_of_range for an unregistered page.
    [[nodiscard]] PageClass classify_page(std::uint64_t page) const;
    [[nodiscard]] bool registered(std::uint64_t page) const;

    /// Fills a read-only page from the flash datapath (rolls its major).
    /// `plaintext` is stored only in functional mode and may be empty.
    AccessResult load_page(std::uint64_t page, std::span<const std::uint8_t> plaintext = {});

    /// Reads `bytes` starting at `address` (must stay within one page).
    /// In functional mode `out` receives plaintext when sized to `bytes`.
    AccessResult secure_read(std::uint64_t address, std::uint32_t bytes, std::span<std::uint8_t> out = {});
    /// Writes `bytes` at `address`; `data` (functional mode) may be empty.
    AccessResult secure_write(std::uint64_t address, std::uint32_t bytes, std::span<const std::uint8_t> data = {});

    /// Recomputes the tree from its leaves and compares every node and the
    /// root register. Throws IntegrityViolation naming the first mismatch.
    void verify_root(Tree tree) const;

    [[nodiscard]] TrafficReport traffic_report() const;
    [[nodiscard]] const SecureMemoryStats& stats() const noexcept { return stats_; }
    [[nodiscard]] const CounterCache& counter_cache() const noexcept { return cache_; }
    [[nodiscard]] const SecureMemoryConfig& config() const noexcept { return config_; }
    /// Interior levels between a leaf and the root: ceil(log8(leaves)).
    [[nodiscard]] std::uint32_t path_length(Tree tree) const noexcept;
    [[nodiscard]] std::uint64_t leaves(Tree tree) const noexcept;
    [[nodiscard]] std::uint64_t root(Tree tree) const noexcept;

    // Counter inspection.
    [[nodiscard]] std::uint64_t major_of(std::uint64_t page) const;
    [[nodiscard]] std::uint32_t minor_of(std::uint64_t page, std::uint32_t line) const;
    /// Counter-line working set: distinct metadata lines holding the
    /// counters of `pages`.
    [[nodiscard]] std::uint64_t counter_lines_for(std::span<const std::uint64_t> pages) const;

    // Tamper hooks (functional mode).
    void flip_data_bit(std::uint64_t page, std::uint32_t line, std::uint32_t bit);
    void flip_mac_bit(std::uint64_t page, std::uint32_t line, std::uint32_t bit);
    void flip_counter_bit(Tree tree, std::uint64_t leaf, std::uint32_t bit);
    void flip_node_bit(Tree tree, std::uint32_t level, std::uint64_t node, std::uint32_t bit);
    [[nodiscard]] std::uint64_t nodes_at(Tree tree, std::uint32_t level) const;
    /// Tree and leaf covering a registered page's counters.
    [[nodiscard]] std::pair<Tree, std::uint64_t> counter_leaf(std::uint64_t page) const;

private:
    struct PageInfo {
        PageClass cls = PageClass::ReadOnly;
        std::uint64_t slot = 0;
        bool live = false;
    };
    struct Store {
        std::vector<std::uint8_t> cipher;
        std::array<std::uint64_t, kLinesPerPage> mac{};
    };
    struct TreeState {
        std::uint64_t leaves = 0;
        std::uint32_t levels = 0;
        // nodes[l-1][j] holds the 8 child digests of node j at level l.
        std::vector<std::vector<std::array<std::uint64_t, kArity>>> nodes;
        std::uint64_t root = 0;
    };

    const PageInfo& info(std::uint64_t page) const;
    [[nodiscard]] std::uint64_t leaf_of(const PageInfo& p) const noexcept;
    [[nodiscard]] std::array<std::uint8_t, 64> leaf_bytes(Tree t, std::uint64_t leaf) const;
    [[nodiscard]] std::uint64_t leaf_digest(Tree t, std::uint64_t leaf) const;
    [[nodiscard]] std::uint64_t node_digest(Tree t, std::uint32_t level, std::uint64_t j) const;
    void rebuild(Tree t);
    void update_path(Tree t, std::uint64_t leaf);
    void verify_path(Tree t, std::uint64_t leaf) const;
    [[nodiscard]] TreeState& tree(Tree t) noexcept { return t == Tree::ReadOnly ? ro_tree_ : rw_tree_; }
    [[nodiscard]] const TreeState& tree(Tree t) const noexcept { return t == Tree::ReadOnly ? ro_tree_ : rw_tree_; }

    /// Counter lookup plus the tree walk that authenticates a fetched
    /// counter (or, for `update`, the path refresh). Charges `r`.
    void touch_counter(Tree t, std::uint64_t leaf, bool update, AccessResult& r);
    void account_eviction(const CounterCache::Outcome& o, AccessResult& r);

    [[nodiscard]] std::uint64_t counter_major(const PageInfo& p) const;
    [[nodiscard]] std::uint32_t counter_minor(const PageInfo& p, std::uint32_t line) const;
    void encrypt_line(std::uint64_t page, const PageInfo& p, std::uint32_t line, const std::uint8_t* plain);
    void decrypt_line(std::uint64_t page, const PageInfo& p, std::uint32_t line, std::uint8_t* plain) const;
    [[nodiscard]] std::uint64_t line_mac(std::uint64_t page, const PageInfo& p, std::uint32_t line) const;
    void finish(AccessResult& r, bool core_access);
    void check_integrity_path(Tree t, std::uint64_t leaf) const;

    SecureMemoryConfig config_;
    CounterCache cache_;
    std::unordered_map<std::uint64_t, PageInfo> pages_;
    // Slot ever assigned to (page, class); reused on re-registration.
    std::unordered_map<std::uint64_t, std::uint64_t> ro_slot_of_;
    std::unordered_map<std::uint64_t, std::uint64_t> rw_slot_of_;
    std::unordered_map<std::uint64_t, Store> store_;
    std::uint64_t next_ro_slot_ = 0;
    std::uint64_t next_rw_slot_ = 0;
    std::vector<std::uint64_t> ro_majors_;
    std::vector<SplitCounterBlock> rw_blocks_;
    TreeState ro_tree_;
    TreeState rw_tree_;
    std::array<std::uint8_t, 32> mac_key_{};
    std::array<std::uint8_t, 32> tree_key_{};
    std::array<std::uint8_t, 32> pad_key_{};
    SecureMemoryStats stats_;
    std::uint64_t demand_bytes_ = 0;
    std::uint64_t encryption_bytes_ = 0;
    std::uint64_t verification_bytes_ = 0;
};

} // namespace ssdtee::secmem
