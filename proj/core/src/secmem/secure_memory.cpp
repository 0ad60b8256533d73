#include "ssdtee/secmem/secure_memory.hpp"

#include "ssdtee/error.hpp"
#include "ssdtee/sim/rng.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace ssdtee::secmem {

namespace {

// Cache keys: kind | tree | level | index.
constexpr std::uint64_t kCounterKind = 0;
constexpr std::uint64_t kNodeKind = 1;

constexpr std::uint64_t cache_key(std::uint64_t kind, Tree t, std::uint32_t level, std::uint64_t idx) {
    return kind << 60 | std::uint64_t{static_cast<std::uint8_t>(t)} << 56 | std::uint64_t{level} << 48 | idx;
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        p[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = v << 8 | p[i];
    }
    return v;
}

// Keyed BLAKE2b truncated to 64 bits.
std::uint64_t keyed_hash64(const std::array<std::uint8_t, 32>& key, const std::uint8_t* header, std::size_t header_len,
                           const std::uint8_t* body, std::size_t body_len) {
    crypto_generichash_state st;
    crypto_generichash_init(&st, key.data(), key.size(), 16);
    crypto_generichash_update(&st, header, header_len);
    crypto_generichash_update(&st, body, body_len);
    std::array<std::uint8_t, 16> out{};
    crypto_generichash_final(&st, out.data(), out.size());
    return get_u64(out.data());
}

std::array<std::uint8_t, 32> derive_key(std::uint64_t seed, std::uint64_t label) {
    std::array<std::uint8_t, 32> k{};
    std::uint64_t s = sim::Rng::mix(seed ^ sim::Rng::mix(label));
    for (int i = 0; i < 4; ++i) {
        s = sim::Rng::mix(s + static_cast<std::uint64_t>(i));
        put_u64(k.data() + 8 * i, s);
    }
    return k;
}

std::uint32_t levels_for(std::uint64_t leaves) {
    std::uint32_t l = 0;
    std::uint64_t span = 1;
    while (span < leaves) {
        span *= kArity;
        ++l;
    }
    return l;
}

const char* tree_name(Tree t) { return t == Tree::ReadOnly ? "ro" : "rw"; }

} // namespace

void SecureMemoryConfig::validate() const {
    if (ro_slots == 0 || rw_slots == 0) {
        throw ConfigError("secure memory needs at least one slot per page class");
    }
    if (ro_slots % kCountersPerRoLine != 0) {
        throw ConfigError("ro_slots must be a multiple of 8");
    }
    if (counter_cache_ways == 0 || counter_cache_bytes == 0) {
        throw ConfigError("counter cache must be non-empty");
    }
}

std::uint64_t SplitCounterBlock::major() const noexcept { return get_u64(bytes_.data()); }
void SplitCounterBlock::set_major(std::uint64_t v) noexcept { put_u64(bytes_.data(), v); }

std::uint32_t SplitCounterBlock::minor(std::uint32_t line) const noexcept {
    const std::uint32_t bit = 64 + line * kMinorBits;
    std::uint32_t v = 0;
    for (std::uint32_t b = 0; b < kMinorBits; ++b) {
        const std::uint32_t pos = bit + b;
        v |= static_cast<std::uint32_t>((bytes_[pos / 8] >> (pos % 8)) & 1U) << b;
    }
    return v;
}

void SplitCounterBlock::set_minor(std::uint32_t line, std::uint32_t v) noexcept {
    const std::uint32_t bit = 64 + line * kMinorBits;
    for (std::uint32_t b = 0; b < kMinorBits; ++b) {
        const std::uint32_t pos = bit + b;
        const auto mask = static_cast<std::uint8_t>(1U << (pos % 8));
        if ((v >> b) & 1U) {
            bytes_[pos / 8] |= mask;
        } else {
            bytes_[pos / 8] &= static_cast<std::uint8_t>(~mask);
        }
    }
}

SecureMemory::SecureMemory(SecureMemoryConfig config)
    : config_(config), cache_(config.counter_cache_bytes, config.counter_cache_ways, kLineBytes) {
    config_.validate();
    if (sodium_init() < 0) {
        throw Error("libsodium failed to initialize");
    }
    ro_majors_.assign(config_.ro_slots, 0);
    rw_blocks_.assign(config_.rw_slots, SplitCounterBlock{});
    ro_tree_.leaves = config_.ro_slots / kCountersPerRoLine;
    rw_tree_.leaves = config_.rw_slots;
    ro_tree_.levels = levels_for(ro_tree_.leaves);
    rw_tree_.levels = levels_for(rw_tree_.leaves);
    mac_key_ = derive_key(config_.key_seed, 1);
    tree_key_ = derive_key(config_.key_seed, 2);
    pad_key_ = derive_key(config_.key_seed, 3);
    if (config_.functional) {
        rebuild(Tree::ReadOnly);
        rebuild(Tree::Writable);
    }
}

const SecureMemory::PageInfo& SecureMemory::info(std::uint64_t page) const {
    auto it = pages_.find(page);
    if (it == pages_.end() || !it->second.live) {
        throw std::out_of_range("page " + std::to_string(page) + " is not registered with secure memory");
    }
    return it->second;
}

bool SecureMemory::registered(std::uint64_t page) const {
    auto it = pages_.find(page);
    return it != pages_.end() && it->second.live;
}

PageClass SecureMemory::classify_page(std::uint64_t page) const { return info(page).cls; }

std::uint64_t SecureMemory::leaf_of(const PageInfo& p) const noexcept {
    return p.cls == PageClass::ReadOnly ? p.slot / kCountersPerRoLine : p.slot;
}

std::uint64_t SecureMemory::counter_major(const PageInfo& p) const {
    return p.cls == PageClass::ReadOnly ? ro_majors_[p.slot] : rw_blocks_[p.slot].major();
}

std::uint32_t SecureMemory::counter_minor(const PageInfo& p, std::uint32_t line) const {
    return p.cls == PageClass::ReadOnly ? 0 : rw_blocks_[p.slot].minor(line);
}

std::uint64_t SecureMemory::major_of(std::uint64_t page) const { return counter_major(info(page)); }
std::uint32_t SecureMemory::minor_of(std::uint64_t page, std::uint32_t line) const {
    return counter_minor(info(page), line);
}

std::uint64_t SecureMemory::leaves(Tree t) const noexcept { return tree(t).leaves; }
std::uint32_t SecureMemory::path_length(Tree t) const noexcept { return tree(t).levels; }
std::uint64_t SecureMemory::root(Tree t) const noexcept { return tree(t).root; }

std::uint64_t SecureMemory::nodes_at(Tree t, std::uint32_t level) const {
    const TreeState& ts = tree(t);
    if (level == 0 || level > ts.levels) {
        throw std::out_of_range("tree level out of range");
    }
    return ts.nodes[level - 1].size();
}

std::pair<Tree, std::uint64_t> SecureMemory::counter_leaf(std::uint64_t page) const {
    const PageInfo& p = info(page);
    return {p.cls == PageClass::ReadOnly ? Tree::ReadOnly : Tree::Writable, leaf_of(p)};
}

std::uint64_t SecureMemory::counter_lines_for(std::span<const std::uint64_t> pages) const {
    std::unordered_set<std::uint64_t> lines;
    for (auto page : pages) {
        const PageInfo& p = info(page);
        lines.insert(cache_key(kCounterKind, p.cls == PageClass::ReadOnly ? Tree::ReadOnly : Tree::Writable, 0,
                               leaf_of(p)));
    }
    return lines.size();
}

// ---- integrity trees ----

std::array<std::uint8_t, 64> SecureMemory::leaf_bytes(Tree t, std::uint64_t leaf) const {
    if (t == Tree::Writable) {
        return rw_blocks_[leaf].bytes();
    }
    std::array<std::uint8_t, 64> b{};
    for (std::uint32_t i = 0; i < kCountersPerRoLine; ++i) {
        put_u64(b.data() + 8 * i, ro_majors_[leaf * kCountersPerRoLine + i]);
    }
    return b;
}

namespace {
std::array<std::uint8_t, 17> node_header(Tree t, std::uint32_t level, std::uint64_t idx) {
    std::array<std::uint8_t, 17> h{};
    h[0] = static_cast<std::uint8_t>(t);
    put_u64(h.data() + 1, level);
    put_u64(h.data() + 9, idx);
    return h;
}
} // namespace

std::uint64_t SecureMemory::leaf_digest(Tree t, std::uint64_t leaf) const {
    const auto h = node_header(t, 0, leaf);
    const auto b = leaf_bytes(t, leaf);
    return keyed_hash64(tree_key_, h.data(), h.size(), b.data(), b.size());
}

std::uint64_t SecureMemory::node_digest(Tree t, std::uint32_t level, std::uint64_t j) const {
    const auto h = node_header(t, level, j);
    std::array<std::uint8_t, 64> b{};
    const auto& node = tree(t).nodes[level - 1][j];
    for (std::uint32_t i = 0; i < kArity; ++i) {
        put_u64(b.data() + 8 * i, node[i]);
    }
    return keyed_hash64(tree_key_, h.data(), h.size(), b.data(), b.size());
}

void SecureMemory::rebuild(Tree t) {
    TreeState& ts = tree(t);
    ts.nodes.assign(ts.levels, {});
    std::vector<std::uint64_t> below(ts.leaves);
    for (std::uint64_t i = 0; i < ts.leaves; ++i) {
        below[i] = leaf_digest(t, i);
    }
    for (std::uint32_t l = 1; l <= ts.levels; ++l) {
        auto& level = ts.nodes[l - 1];
        level.assign(ceil_div(below.size(), kArity), {});
        for (std::uint64_t i = 0; i < below.size(); ++i) {
            level[i / kArity][i % kArity] = below[i];
        }
        below.assign(level.size(), 0);
        for (std::uint64_t j = 0; j < level.size(); ++j) {
            below[j] = node_digest(t, l, j);
        }
    }
    ts.root = below.front();
}

void SecureMemory::update_path(Tree t, std::uint64_t leaf) {
    if (!config_.functional) {
        return;
    }
    TreeState& ts = tree(t);
    std::uint64_t digest = leaf_digest(t, leaf);
    std::uint64_t idx = leaf;
    for (std::uint32_t l = 1; l <= ts.levels; ++l) {
        ts.nodes[l - 1][idx / kArity][idx % kArity] = digest;
        idx /= kArity;
        digest = node_digest(t, l, idx);
    }
    ts.root = digest;
}

void SecureMemory::verify_path(Tree t, std::uint64_t leaf) const {
    const TreeState& ts = tree(t);
    std::uint64_t digest = leaf_digest(t, leaf);
    std::uint64_t idx = leaf;
    for (std::uint32_t l = 1; l <= ts.levels; ++l) {
        if (ts.nodes[l - 1][idx / kArity][idx % kArity] != digest) {
            throw IntegrityViolation(std::string(tree_name(t)) + " tree mismatch at level " + std::to_string(l - 1) +
                                     " index " + std::to_string(idx) + " (leaf " + std::to_string(leaf) + ")");
        }
        idx /= kArity;
        digest = node_digest(t, l, idx);
    }
    if (digest != ts.root) {
        throw IntegrityViolation(std::string(tree_name(t)) + " root mismatch (leaf " + std::to_string(leaf) + ")");
    }
}

void SecureMemory::check_integrity_path(Tree t, std::uint64_t leaf) const {
    if (config_.functional) {
        verify_path(t, leaf);
    }
}

void SecureMemory::verify_root(Tree t) const {
    if (!config_.functional) {
        return;
    }
    const TreeState& ts = tree(t);
    std::vector<std::uint64_t> below(ts.leaves);
    for (std::uint64_t i = 0; i < ts.leaves; ++i) {
        below[i] = leaf_digest(t, i);
    }
    for (std::uint32_t l = 1; l <= ts.levels; ++l) {
        const auto& level = ts.nodes[l - 1];
        for (std::uint64_t i = 0; i < below.size(); ++i) {
            if (level[i / kArity][i % kArity] != below[i]) {
                throw IntegrityViolation(std::string(tree_name(t)) + " tree mismatch at level " +
                                         std::to_string(l - 1) + " index " + std::to_string(i) + " (parent " +
                                         std::to_string(i / kArity) + " at level " + std::to_string(l) + ")");
            }
        }
        below.assign(level.size(), 0);
        for (std::uint64_t j = 0; j < level.size(); ++j) {
            below[j] = node_digest(t, l, j);
        }
    }
    if (below.front() != ts.root) {
        throw IntegrityViolation(std::string(tree_name(t)) + " root register mismatch");
    }
}

// ---- data path ----

namespace {
std::array<std::uint8_t, 34> line_tuple(PageClass cls, std::uint64_t page, std::uint32_t line, std::uint64_t major,
                                        std::uint32_t minor) {
    std::array<std::uint8_t, 34> h{};
    h[0] = static_cast<std::uint8_t>(cls);
    put_u64(h.data() + 1, page);
    h[9] = static_cast<std::uint8_t>(line);
    put_u64(h.data() + 10, major);
    put_u64(h.data() + 18, minor);
    h[26] = 0xA5;
    return h;
}
} // namespace

std::uint64_t SecureMemory::line_mac(std::uint64_t page, const PageInfo& p, std::uint32_t line) const {
    const auto h = line_tuple(p.cls, page, line, counter_major(p), counter_minor(p, line));
    const auto& st = store_.at(page);
    return keyed_hash64(mac_key_, h.data(), h.size(), st.cipher.data() + std::size_t{line} * kLineBytes, kLineBytes);
}

void SecureMemory::encrypt_line(std::uint64_t page, const PageInfo& p, std::uint32_t line, const std::uint8_t* plain) {
    const auto h = line_tuple(p.cls, page, line, counter_major(p), counter_minor(p, line));
    std::array<std::uint8_t, 64> pad{};
    crypto_generichash(pad.data(), pad.size(), h.data(), h.size(), pad_key_.data(), pad_key_.size());
    Store& st = store_[page];
    st.cipher.resize(kPageBytes);
    std::uint8_t* c = st.cipher.data() + std::size_t{line} * kLineBytes;
    for (std::uint32_t i = 0; i < kLineBytes; ++i) {
        c[i] = plain[i] ^ pad[i];
    }
    st.mac[line] = line_mac(page, p, line);
}

void SecureMemory::decrypt_line(std::uint64_t page, const PageInfo& p, std::uint32_t line,
                                std::uint8_t* plain) const {
    const auto& st = store_.at(page);
    if (line_mac(page, p, line) != st.mac[line]) {
        throw IntegrityViolation("MAC mismatch on page " + std::to_string(page) + " line " + std::to_string(line));
    }
    const auto h = line_tuple(p.cls, page, line, counter_major(p), counter_minor(p, line));
    std::array<std::uint8_t, 64> pad{};
    crypto_generichash(pad.data(), pad.size(), h.data(), h.size(), pad_key_.data(), pad_key_.size());
    const std::uint8_t* c = st.cipher.data() + std::size_t{line} * kLineBytes;
    for (std::uint32_t i = 0; i < kLineBytes; ++i) {
        plain[i] = c[i] ^ pad[i];
    }
}

void SecureMemory::register_page(std::uint64_t page, PageClass cls) {
    auto it = pages_.find(page);
    if (it != pages_.end() && it->second.live) {
        if (it->second.cls != cls) {
            throw ReclassificationForbidden("page " + std::to_string(page) + " keeps the class it was registered with");
        }
        return;
    }
    auto& slots = cls == PageClass::ReadOnly ? ro_slot_of_ : rw_slot_of_;
    auto slot = slots.find(page);
    if (slot == slots.end()) {
        std::uint64_t& next = cls == PageClass::ReadOnly ? next_ro_slot_ : next_rw_slot_;
        const std::uint64_t cap = cls == PageClass::ReadOnly ? config_.ro_slots : config_.rw_slots;
        if (next >= cap) {
            throw SecureMemoryFull(std::string(cls == PageClass::ReadOnly ? "read-only" : "writable") +
                                   " counter pool exhausted");
        }
        slot = slots.emplace(page, next++).first;
    }
    const PageInfo& p = pages_[page] = PageInfo{cls, slot->second, true};
    if (cls == PageClass::ReadOnly) {
        return; // contents arrive through load_page
    }
    // Zero-fill under a fresh major; this is the page's first write.
    check_integrity_path(Tree::Writable, leaf_of(p));
    SplitCounterBlock& blk = rw_blocks_[p.slot];
    blk.set_major(blk.major() + 1);
    for (std::uint32_t i = 0; i < kLinesPerPage; ++i) {
        blk.set_minor(i, 1);
    }
    if (config_.functional) {
        const std::array<std::uint8_t, 64> zero{};
        for (std::uint32_t i = 0; i < kLinesPerPage; ++i) {
            encrypt_line(page, p, i, zero.data());
        }
    }
    update_path(Tree::Writable, leaf_of(p));
}

void SecureMemory::release_page(std::uint64_t page) {
    auto it = pages_.find(page);
    if (it == pages_.end() || !it->second.live) {
        throw std::out_of_range("page " + std::to_string(page) + " is not registered with secure memory");
    }
    it->second.live = false;
    store_.erase(page);
}

void SecureMemory::account_eviction(const CounterCache::Outcome& o, AccessResult& r) {
    if (!o.dirty_victim) {
        return;
    }
    if ((*o.dirty_victim >> 60) == kCounterKind) {
        r.encryption_traffic += kLineBytes;
    } else {
        r.verification_traffic += kLineBytes;
    }
}

void SecureMemory::touch_counter(Tree t, std::uint64_t leaf, bool update, AccessResult& r) {
    const auto o = cache_.access(cache_key(kCounterKind, t, 0, leaf), update);
    account_eviction(o, r);
    if (!o.hit) {
        r.counter_hit = false;
        r.encryption_ns += config_.dram_access_ns;
        r.encryption_traffic += kLineBytes;
    }
    if (o.hit && !update) {
        return; // cached counters are already trusted
    }
    std::uint64_t idx = leaf;
    const std::uint32_t levels = tree(t).levels;
    for (std::uint32_t l = 1; l <= levels; ++l) {
        idx /= kArity;
        const auto n = cache_.access(cache_key(kNodeKind, t, l, idx), update);
        account_eviction(n, r);
        if (!n.hit) {
            r.verification_ns += config_.dram_access_ns;
            r.verification_traffic += kLineBytes;
        } else if (!update) {
            break;
        }
    }
}

void SecureMemory::finish(AccessResult& r, bool core_access) {
    r.latency = config_.dram_access_ns + r.encryption_ns + r.verification_ns;
    encryption_bytes_ += r.encryption_traffic;
    verification_bytes_ += r.verification_traffic;
    if (!core_access) {
        stats_.load_charge_ns += r.encryption_ns + r.verification_ns;
    } else {
        stats_.encryption_charge_ns += r.encryption_ns;
        stats_.verification_charge_ns += r.verification_ns;
        stats_.access_encryption_latency_ns += config_.dram_access_ns + r.encryption_ns;
        stats_.access_verification_latency_ns += r.latency;
    }
}

AccessResult SecureMemory::load_page(std::uint64_t page, std::span<const std::uint8_t> plaintext) {
    const PageInfo& p = info(page);
    if (p.cls != PageClass::ReadOnly) {
        throw WriteToReadOnly("load_page targets read-only input pages only");
    }
    if (!plaintext.empty() && plaintext.size() != kPageBytes) {
        throw std::invalid_argument("load_page payload must be one page");
    }
    AccessResult r;
    check_integrity_path(Tree::ReadOnly, leaf_of(p));
    ++ro_majors_[p.slot];
    touch_counter(Tree::ReadOnly, leaf_of(p), true, r);
    r.encryption_ns += config_.aes_pad_ns;
    if (config_.functional) {
        std::array<std::uint8_t, 64> zero{};
        for (std::uint32_t i = 0; i < kLinesPerPage; ++i) {
            const std::uint8_t* src = plaintext.empty() ? zero.data() : plaintext.data() + std::size_t{i} * kLineBytes;
            encrypt_line(page, p, i, src);
        }
    }
    update_path(Tree::ReadOnly, leaf_of(p));
    demand_bytes_ += kPageBytes;
    ++stats_.loads;
    finish(r, false);
    return r;
}

namespace {
std::pair<std::uint32_t, std::uint32_t> line_span(std::uint64_t address, std::uint32_t bytes) {
    if (bytes == 0) {
        throw std::invalid_argument("secure access of zero bytes");
    }
    const std::uint64_t off = address % kPageBytes;
    if (off + bytes > kPageBytes) {
        throw std::invalid_argument("secure access crosses a page boundary");
    }
    return {static_cast<std::uint32_t>(off / kLineBytes), static_cast<std::uint32_t>((off + bytes - 1) / kLineBytes)};
}
} // namespace

AccessResult SecureMemory::secure_read(std::uint64_t address, std::uint32_t bytes, std::span<std::uint8_t> out) {
    const std::uint64_t page = address / kPageBytes;
    const PageInfo& p = info(page);
    const auto [first, last] = line_span(address, bytes);
    const Tree t = p.cls == PageClass::ReadOnly ? Tree::ReadOnly : Tree::Writable;
    AccessResult r;
    touch_counter(t, leaf_of(p), false, r);
    check_integrity_path(t, leaf_of(p));
    if (config_.functional) {
        std::array<std::uint8_t, 64> plain{};
        const std::uint64_t off = address % kPageBytes;
        for (std::uint32_t l = first; l <= last; ++l) {
            decrypt_line(page, p, l, plain.data());
            if (out.size() == bytes) {
                for (std::uint32_t i = 0; i < kLineBytes; ++i) {
                    const std::uint64_t pos = std::uint64_t{l} * kLineBytes + i;
                    if (pos >= off && pos < off + bytes) {
                        out[pos - off] = plain[i];
                    }
                }
            }
        }
    }
    const Duration pad = config_.pad_overlap
                             ? (config_.aes_pad_ns > config_.dram_access_ns ? config_.aes_pad_ns - config_.dram_access_ns : 0)
                             : config_.aes_pad_ns;
    r.encryption_ns += pad;
    r.verification_ns += config_.mac_check_ns;
    demand_bytes_ += std::uint64_t{last - first + 1} * kLineBytes;
    ++stats_.reads;
    finish(r, true);
    return r;
}

AccessResult SecureMemory::secure_write(std::uint64_t address, std::uint32_t bytes, std::span<const std::uint8_t> data) {
    const std::uint64_t page = address / kPageBytes;
    const PageInfo& p = info(page);
    if (p.cls == PageClass::ReadOnly) {
        throw WriteToReadOnly("page " + std::to_string(page) + " is read-only");
    }
    const auto [first, last] = line_span(address, bytes);
    const std::uint64_t leaf = leaf_of(p);
    AccessResult r;
    // Pre-write check of the existing counter and lines.
    std::vector<std::uint8_t> plain;
    check_integrity_path(Tree::Writable, leaf);
    if (config_.functional) {
        plain.resize(kPageBytes);
        for (std::uint32_t l = first; l <= last; ++l) {
            decrypt_line(page, p, l, plain.data() + std::size_t{l} * kLineBytes);
        }
        if (data.size() == bytes) {
            std::memcpy(plain.data() + address % kPageBytes, data.data(), bytes);
        }
    }
    SplitCounterBlock& blk = rw_blocks_[p.slot];
    bool overflow = false;
    for (std::uint32_t l = first; l <= last; ++l) {
        if (blk.minor(l) + 1 >= kMinorLimit) {
            overflow = true;
        }
    }
    if (overflow) {
        // Roll the major and re-encrypt the whole page under minors of zero.
        if (config_.functional) {
            for (std::uint32_t l = 0; l < kLinesPerPage; ++l) {
                if (l < first || l > last) {
                    decrypt_line(page, p, l, plain.data() + std::size_t{l} * kLineBytes);
                }
            }
        }
        blk.set_major(blk.major() + 1);
        for (std::uint32_t l = 0; l < kLinesPerPage; ++l) {
            blk.set_minor(l, 0);
        }
        if (config_.functional) {
            for (std::uint32_t l = 0; l < kLinesPerPage; ++l) {
                if (l < first || l > last) {
                    encrypt_line(page, p, l, plain.data() + std::size_t{l} * kLineBytes);
                }
            }
        }
        r.overflow = true;
        r.encryption_traffic += 2ULL * kPageBytes;
        r.encryption_ns += 2ULL * kLinesPerPage * config_.dram_line_ns + config_.aes_pad_ns;
        ++stats_.overflows;
    }
    for (std::uint32_t l = first; l <= last; ++l) {
        blk.set_minor(l, blk.minor(l) + 1);
        if (config_.functional) {
            encrypt_line(page, p, l, plain.data() + std::size_t{l} * kLineBytes);
        }
    }
    touch_counter(Tree::Writable, leaf, true, r);
    update_path(Tree::Writable, leaf);
    stats_.nodes_touched_last_write = std::uint64_t{rw_tree_.levels} + 1;
    r.encryption_ns += config_.aes_pad_ns;
    r.verification_ns += config_.mac_check_ns;
    demand_bytes_ += std::uint64_t{last - first + 1} * kLineBytes;
    ++stats_.writes;
    finish(r, true);
    return r;
}

TrafficReport SecureMemory::traffic_report() const {
    TrafficReport t;
    t.demand_bytes = demand_bytes_;
    t.encryption_bytes = encryption_bytes_;
    t.verification_bytes = verification_bytes_;
    if (demand_bytes_ > 0) {
        t.encryption_extra_pct = 100.0 * static_cast<double>(encryption_bytes_) / static_cast<double>(demand_bytes_);
        t.verification_extra_pct =
            100.0 * static_cast<double>(verification_bytes_) / static_cast<double>(demand_bytes_);
    }
    return t;
}

// ---- tamper hooks ----

void SecureMemory::flip_data_bit(std::uint64_t page, std::uint32_t line, std::uint32_t bit) {
    auto& st = store_.at(page);
    st.cipher.at(std::size_t{line} * kLineBytes + bit / 8) ^= static_cast<std::uint8_t>(1U << (bit % 8));
}

void SecureMemory::flip_mac_bit(std::uint64_t page, std::uint32_t line, std::uint32_t bit) {
    store_.at(page).mac.at(line) ^= std::uint64_t{1} << (bit % 64);
}

void SecureMemory::flip_counter_bit(Tree t, std::uint64_t leaf, std::uint32_t bit) {
    if (leaf >= tree(t).leaves || bit >= 512) {
        throw std::out_of_range("counter bit out of range");
    }
    if (t == Tree::Writable) {
        rw_blocks_[leaf].bytes()[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
    } else {
        ro_majors_[leaf * kCountersPerRoLine + bit / 64] ^= std::uint64_t{1} << (bit % 64);
    }
}

void SecureMemory::flip_node_bit(Tree t, std::uint32_t level, std::uint64_t node, std::uint32_t bit) {
    TreeState& ts = tree(t);
    if (level == 0 || level > ts.levels || node >= ts.nodes[level - 1].size() || bit >= 512) {
        throw std::out_of_range("tree node out of range");
    }
    ts.nodes[level - 1][node][bit / 64] ^= std::uint64_t{1} << (bit % 64);
}

} // namespace ssdtee::secmem
