#include "ssdtee/ftl/ftl.hpp"

#include "ssdtee/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace ssdtee::ftl {

void GcConfig::validate() const {
    if (!(free_block_low_watermark > 0.0 && free_block_low_watermark < 1.0)) {
        throw ConfigError("gc.free_block_low_watermark must be in (0, 1)");
    }
}

void FtlConfig::validate() const {
    gc.validate();
    if (entries_per_frame == 0) {
        throw ConfigError("ftl.entries_per_frame must be >= 1");
    }
    if (cache_entries == 0 && !(cache_fraction > 0.0 && cache_fraction <= 1.0)) {
        throw ConfigError("ftl.cache_fraction must be in (0, 1]");
    }
}

namespace {

std::uint64_t cache_frames(const FtlConfig& c, std::uint64_t logical_pages) {
    const std::uint64_t entries = c.cache_entries != 0
                                      ? c.cache_entries
                                      : static_cast<std::uint64_t>(c.cache_fraction * static_cast<double>(logical_pages));
    return std::max<std::uint64_t>(1, entries / c.entries_per_frame);
}

} // namespace

Ftl::Ftl(flash::FlashStore& flash, FtlConfig config)
    : flash_(flash),
      config_((config.validate(), config)),
      logical_pages_(config.logical_pages != 0 ? config.logical_pages : flash.geometry().total_pages()),
      cache_(cache_frames(config_, logical_pages_)) {
    const auto& g = flash_.geometry();
    table_.resize(ceil_div(logical_pages_, config_.entries_per_frame));

    units_.resize(g.parallel_units());
    for (std::uint64_t u = 0; u < units_.size(); ++u) {
        units_[u].first_block = u * g.blocks_per_plane;
        units_[u].fresh_end = g.blocks_per_plane;
    }
    // Unit id = die * planes + plane with die = (channel*chips + chip)*dies + die.
    // Walk channels fastest, then chips, dies and planes.
    unit_order_.reserve(units_.size());
    for (std::uint32_t plane = 0; plane < g.planes_per_die; ++plane) {
        for (std::uint32_t die = 0; die < g.dies_per_chip; ++die) {
            for (std::uint32_t chip = 0; chip < g.chips_per_channel; ++chip) {
                for (std::uint32_t ch = 0; ch < g.channels; ++ch) {
                    const std::uint64_t flat_die = (std::uint64_t{ch} * g.chips_per_channel + chip) * g.dies_per_chip + die;
                    unit_order_.push_back(flat_die * g.planes_per_die + plane);
                }
            }
        }
    }
    free_blocks_ = g.total_blocks();
    gc_threshold_ = std::max<std::uint64_t>(
        2, static_cast<std::uint64_t>(std::ceil(config_.gc.free_block_low_watermark * static_cast<double>(g.total_blocks()))));
}

MappingEntry Ftl::entry(Lpa lpa) const {
    if (lpa.value >= logical_pages_) {
        throw std::out_of_range("lpa beyond logical space");
    }
    const auto& chunk = table_[lpa.value / config_.entries_per_frame];
    return chunk ? chunk[lpa.value % config_.entries_per_frame] : MappingEntry{};
}

MappingEntry& Ftl::slot(Lpa lpa) {
    if (lpa.value >= logical_pages_) {
        throw std::out_of_range("lpa beyond logical space");
    }
    auto& chunk = table_[lpa.value / config_.entries_per_frame];
    if (!chunk) {
        chunk = std::make_unique<MappingEntry[]>(config_.entries_per_frame);
    }
    return chunk[lpa.value % config_.entries_per_frame];
}

Translation Ftl::translate(Lpa lpa, TeeId requester) {
    const MappingEntry e = entry(lpa);
    ++translations_;
    Translation t;
    t.frame = frame_of(lpa);
    if (cache_.lookup(t.frame)) {
        t.from = ServicedFrom::Cache;
        t.latency = flash_.latency().dram_access_ns;
    } else {
        cache_.install(t.frame);
        t.from = ServicedFrom::SecureWorld;
        t.latency = 2 * flash_.latency().world_switch_ns + flash_.latency().t_rd_ns + flash_.page_transfer_ns();
    }
    if (!check_permission(e, requester)) {
        throw PermissionDenied("tee " + std::to_string(requester.value) + " may not access lpa " +
                               std::to_string(lpa.value));
    }
    if (!e.valid()) {
        throw UnmappedLpa("lpa " + std::to_string(lpa.value) + " is not mapped");
    }
    t.ppa = e.ppa();
    return t;
}

SetIdResult Ftl::set_id_bits(std::span<const Lpa> lpas, TeeId tee, bool read_only) {
    SetIdResult r;
    for (const Lpa lpa : lpas) {
        MappingEntry& e = slot(lpa);
        if (e.tee_id() != tee && !e.tee_id().is_ftl()) {
            r.conflicts.push_back({lpa, e.tee_id()});
            continue;
        }
        e.set_tee_id(tee);
        e.set_read_only(read_only);
        ++r.updated;
    }
    return r;
}

std::uint64_t Ftl::clear_id_bits(std::span<const Lpa> lpas, TeeId tee) {
    std::uint64_t n = 0;
    for (const Lpa lpa : lpas) {
        MappingEntry& e = slot(lpa);
        if (e.tee_id() == tee && !tee.is_ftl()) {
            e.set_tee_id(kFtlTeeId);
            e.set_read_only(false);
            ++n;
        }
    }
    return n;
}

bool Ftl::unit_has_free_block(const Unit& u) const noexcept {
    return u.fresh_next < u.fresh_end || !u.recycled.empty();
}

std::uint64_t Ftl::take_block(Unit& u) {
    std::uint64_t b;
    // Never-used blocks have erase count 0, below any recycled block.
    if (u.fresh_next < u.fresh_end) {
        b = u.first_block + u.fresh_next++;
    } else {
        b = u.recycled.begin()->second;
        u.recycled.erase(u.recycled.begin());
    }
    --free_blocks_;
    return b;
}

std::optional<std::uint64_t> Ftl::take_block_global() {
    Unit* best = nullptr;
    std::tuple<std::uint32_t, std::uint64_t> best_key{};
    for (auto& u : units_) {
        std::tuple<std::uint32_t, std::uint64_t> key;
        if (u.fresh_next < u.fresh_end) {
            key = {0, u.first_block + u.fresh_next};
        } else if (!u.recycled.empty()) {
            key = *u.recycled.begin();
        } else {
            continue;
        }
        if (best == nullptr || key < best_key) {
            best = &u;
            best_key = key;
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    return take_block(*best);
}

std::optional<Ppa> Ftl::allocate_host() {
    const auto ppb = geometry().pages_per_block;
    for (std::uint64_t k = 0; k < unit_order_.size(); ++k) {
        const std::uint64_t pos = (rr_ + k) % unit_order_.size();
        Unit& u = units_[unit_order_[pos]];
        if (u.active && flash_.block(*u.active).next_page >= ppb) {
            closed_.insert(*u.active);
            u.active.reset();
        }
        if (!u.active) {
            if (!unit_has_free_block(u)) {
                continue;
            }
            u.active = take_block(u);
        }
        rr_ = (pos + 1) % unit_order_.size();
        const Ppa ppa{*u.active * ppb + flash_.block(*u.active).next_page};
        if (flash_.block(*u.active).next_page + 1 >= ppb) {
            closed_.insert(*u.active);
            u.active.reset();
        }
        return ppa;
    }
    return std::nullopt;
}

std::optional<Ppa> Ftl::allocate_gc() {
    const auto ppb = geometry().pages_per_block;
    if (!gc_active_) {
        gc_active_ = take_block_global();
        if (!gc_active_) {
            return std::nullopt;
        }
    }
    const Ppa ppa{*gc_active_ * ppb + flash_.block(*gc_active_).next_page};
    if (flash_.block(*gc_active_).next_page + 1 >= ppb) {
        closed_.insert(*gc_active_);
        gc_active_.reset();
    }
    return ppa;
}

void Ftl::place(Lpa lpa, Ppa ppa, flash::PageData data) {
    MappingEntry& e = slot(lpa);
    if (e.valid()) {
        flash_.invalidate(e.ppa());
    }
    flash_.program_untimed(ppa, lpa, std::move(data));
    e.set_ppa(ppa);
    e.set_valid(true);
}

void Ftl::release_block(std::uint64_t block) {
    closed_.erase(block);
    flash_.erase_untimed(block);
    Unit& u = units_[flash_.codec().unit_of_block(block)];
    u.recycled.emplace(flash_.block(block).erase_count, block);
    ++free_blocks_;
}

std::optional<std::uint64_t> Ftl::pick_victim() const {
    const auto ppb = geometry().pages_per_block;
    std::optional<std::uint64_t> victim;
    std::tuple<std::uint32_t, std::uint32_t, std::uint64_t> best{};
    for (const std::uint64_t b : closed_) {
        const auto info = flash_.block(b);
        if (info.valid >= ppb) {
            continue;
        }
        const std::tuple<std::uint32_t, std::uint32_t, std::uint64_t> key{info.valid, info.erase_count, b};
        if (!victim || key < best) {
            victim = b;
            best = key;
        }
    }
    return victim;
}

bool Ftl::need_gc() const noexcept { return free_blocks_ < gc_threshold_; }

GcResult Ftl::collect_garbage() {
    GcResult r;
    const auto ppb = geometry().pages_per_block;
    const auto& lat = flash_.latency();
    while (need_gc()) {
        const auto victim = pick_victim();
        if (!victim) {
            break;
        }
        bool stuck = false;
        const Ppa first = flash_.codec().first_page(*victim);
        for (std::uint32_t p = 0; p < ppb && !stuck; ++p) {
            const Ppa src{first.value + p};
            const auto st = flash_.page(src);
            if (st.status != flash::PageStatus::Valid) {
                continue;
            }
            const auto dst = allocate_gc();
            if (!dst) {
                stuck = true;
                break;
            }
            place(*st.owner, *dst, flash_.peek(src));
            ++r.pages_migrated;
            r.time_spent += lat.t_rd_ns + 2 * flash_.page_transfer_ns() + lat.t_wr_ns;
        }
        if (stuck) {
            break;
        }
        release_block(*victim);
        ++r.blocks_erased;
        r.time_spent += lat.t_erase_ns;
    }
    gc_totals_.blocks_erased += r.blocks_erased;
    gc_totals_.pages_migrated += r.pages_migrated;
    gc_totals_.time_spent += r.time_spent;
    return r;
}

void Ftl::check_write(Lpa lpa, TeeId tee) const {
    const MappingEntry e = entry(lpa);
    if (!check_permission(e, tee) || (e.read_only() && !tee.is_ftl())) {
        throw PermissionDenied("tee " + std::to_string(tee.value) + " may not write lpa " + std::to_string(lpa.value));
    }
}

Ppa Ftl::write_lpa_untimed(Lpa lpa, flash::PageData data, TeeId tee) {
    check_write(lpa, tee);
    if (need_gc()) {
        collect_garbage();
    }
    auto ppa = allocate_host();
    if (!ppa) {
        collect_garbage();
        ppa = allocate_host();
        if (!ppa) {
            ppa = allocate_gc();
        }
    }
    if (!ppa) {
        throw DeviceFull("no free page for lpa " + std::to_string(lpa.value));
    }
    place(lpa, *ppa, std::move(data));
    ++host_writes_;
    return *ppa;
}

Ppa Ftl::write_lpa(Lpa lpa, flash::PageData data, TeeId tee, flash::FlashStore::Done done) {
    const auto before = gc_totals_;
    const Ppa ppa = write_lpa_untimed(lpa, std::move(data), tee);
    const Duration gc_time = gc_totals_.time_spent - before.time_spent;
    if (gc_time > 0) {
        flash_.occupy_die(flash_.codec().die_of(ppa), gc_time, nullptr);
    }
    flash_.occupy_program(ppa, std::move(done));
    return ppa;
}

flash::PageData Ftl::read_lpa(Lpa lpa) const {
    const MappingEntry e = entry(lpa);
    if (!e.valid()) {
        throw UnmappedLpa("lpa " + std::to_string(lpa.value) + " is not mapped");
    }
    return flash_.peek(e.ppa());
}

std::string Ftl::audit() const {
    std::uint64_t mapped = 0;
    for (std::uint64_t l = 0; l < logical_pages_; ++l) {
        const auto& chunk = table_[l / config_.entries_per_frame];
        if (!chunk) {
            l += config_.entries_per_frame - 1 - l % config_.entries_per_frame;
            continue;
        }
        const MappingEntry e = chunk[l % config_.entries_per_frame];
        if (!e.valid()) {
            continue;
        }
        ++mapped;
        const auto st = flash_.page(e.ppa());
        if (st.status != flash::PageStatus::Valid || !st.owner || st.owner->value != l) {
            return "lpa " + std::to_string(l) + " points at a page it does not own";
        }
    }
    std::uint64_t valid_pages = 0;
    for (std::uint64_t b = 0; b < geometry().total_blocks(); ++b) {
        valid_pages += flash_.block(b).valid;
    }
    if (valid_pages != mapped) {
        return "valid pages " + std::to_string(valid_pages) + " != mapped lpas " + std::to_string(mapped);
    }
    return {};
}

} // namespace ssdtee::ftl
