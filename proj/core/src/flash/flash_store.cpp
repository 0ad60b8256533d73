#include "ssdtee/flash/flash_store.hpp"

#include "ssdtee/error.hpp"

#include <cstring>
#include <string>

namespace ssdtee::flash {

std::uint64_t content_digest(std::span<const std::uint8_t> bytes) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc908ULL ^ bytes.size();
    std::size_t i = 0;
    for (; i + 8 <= bytes.size(); i += 8) {
        std::uint64_t w;
        std::memcpy(&w, bytes.data() + i, 8);
        h = sim::Rng::mix(h ^ w);
    }
    std::uint64_t tail = 0;
    for (std::size_t s = 0; i < bytes.size(); ++i, s += 8) {
        tail |= std::uint64_t{bytes[i]} << s;
    }
    return sim::Rng::mix(h ^ tail);
}

FlashStore::FlashStore(sim::Kernel& kernel, const FlashGeometry& geometry, const LatencyConfig& latency,
                       bool faithful)
    : kernel_(kernel), geometry_(geometry), latency_(latency), codec_(geometry), faithful_(faithful) {
    geometry_.validate();
    latency_.validate();
    page_transfer_ns_ = transfer_ns(geometry_.page_bytes, latency_.channel_bw_bytes_per_s);
    blocks_.resize(geometry_.total_blocks());
    channels_.reserve(geometry_.channels);
    for (std::uint32_t c = 0; c < geometry_.channels; ++c) {
        channels_.emplace_back("channel" + std::to_string(c));
    }
    dies_.reserve(geometry_.dies());
    for (std::uint64_t d = 0; d < geometry_.dies(); ++d) {
        dies_.emplace_back("die" + std::to_string(d));
    }
}

FlashStore::Block& FlashStore::touch(std::uint64_t block) {
    auto& slot = blocks_.at(block);
    if (!slot) {
        slot = std::make_unique<Block>();
        slot->pages.resize(geometry_.pages_per_block);
    }
    return *slot;
}

const FlashStore::Block* FlashStore::find(std::uint64_t block) const { return blocks_.at(block).get(); }

PageState FlashStore::page(Ppa ppa) const {
    const Block* b = find(codec_.block_of(ppa));
    if (b == nullptr) {
        return {};
    }
    return b->pages[codec_.page_in_block(ppa)];
}

BlockInfo FlashStore::block(std::uint64_t block) const {
    const Block* b = find(block);
    return b == nullptr ? BlockInfo{} : b->info;
}

void FlashStore::check_readable(Ppa ppa) const {
    if (ppa.value >= geometry_.total_pages()) {
        throw std::out_of_range("ppa beyond device");
    }
    switch (page(ppa).status) {
    case PageStatus::Free:
        throw ReadOfFreePage("read of free page " + std::to_string(ppa.value));
    case PageStatus::Invalid:
        throw ReadOfInvalidPage("read of invalid page " + std::to_string(ppa.value));
    case PageStatus::Valid:
        break;
    }
}

void FlashStore::check_programmable(Ppa ppa) const {
    if (ppa.value >= geometry_.total_pages()) {
        throw std::out_of_range("ppa beyond device");
    }
    const PageState st = page(ppa);
    if (st.status != PageStatus::Free) {
        throw ProgramToNonFreePage("program of non-free page " + std::to_string(ppa.value));
    }
    const std::uint32_t cursor = block(codec_.block_of(ppa)).next_page;
    if (codec_.page_in_block(ppa) != cursor) {
        throw ProgramOutOfOrder("program of page offset " + std::to_string(codec_.page_in_block(ppa)) +
                                " with cursor at " + std::to_string(cursor));
    }
}

void FlashStore::apply_program(Ppa ppa, Lpa owner, PageData data) {
    Block& b = touch(codec_.block_of(ppa));
    PageState& st = b.pages[codec_.page_in_block(ppa)];
    if (!data.bytes.empty()) {
        data.digest = content_digest(data.bytes);
    }
    st.status = PageStatus::Valid;
    st.owner = owner;
    st.digest = data.digest;
    b.info.next_page++;
    b.info.valid++;
    if (faithful_ && !data.bytes.empty()) {
        payloads_[ppa.value] = std::move(data.bytes);
    }
    ++programs_;
}

void FlashStore::program_untimed(Ppa ppa, Lpa owner, PageData data) {
    check_programmable(ppa);
    apply_program(ppa, owner, std::move(data));
}

PageData FlashStore::peek(Ppa ppa) const {
    check_readable(ppa);
    PageData out;
    out.digest = page(ppa).digest;
    if (auto it = payloads_.find(ppa.value); it != payloads_.end()) {
        out.bytes = it->second;
    }
    return out;
}

void FlashStore::invalidate(Ppa ppa) {
    Block& b = touch(codec_.block_of(ppa));
    PageState& st = b.pages[codec_.page_in_block(ppa)];
    if (st.status != PageStatus::Valid) {
        return;
    }
    st.status = PageStatus::Invalid;
    b.info.valid--;
    b.info.invalid++;
    payloads_.erase(ppa.value);
}

void FlashStore::erase_untimed(std::uint64_t block) {
    Block& b = touch(block);
    const Ppa first = codec_.first_page(block);
    for (std::uint32_t p = 0; p < geometry_.pages_per_block; ++p) {
        if (b.pages[p].status == PageStatus::Valid) {
            payloads_.erase(first.value + p);
        }
        b.pages[p] = PageState{};
    }
    b.info.next_page = 0;
    b.info.valid = 0;
    b.info.invalid = 0;
    b.info.erase_count++;
    ++erases_;
}

void FlashStore::read_page(Ppa ppa, ReadDone done) {
    PageData data = peek(ppa);
    ++reads_;
    const std::uint64_t d = codec_.die_of(ppa);
    const std::uint32_t c = codec_.channel_of(ppa);
    const SimTime die_grant = dies_[d].acquire(kernel_.now(), latency_.t_rd_ns);
    kernel_.schedule(die_grant + latency_.t_rd_ns, sim::EventKind::DieDone, static_cast<std::uint32_t>(d),
                     [this, c, data = std::move(data), done = std::move(done)]() mutable {
                         const SimTime grant = channels_[c].acquire(kernel_.now(), page_transfer_ns_);
                         const SimTime end = grant + page_transfer_ns_;
                         kernel_.schedule(end, sim::EventKind::ChannelDone, c,
                                          [end, data = std::move(data), done = std::move(done)] {
                                              if (done) {
                                                  done(end, data);
                                              }
                                          });
                     });
}

void FlashStore::program_page(Ppa ppa, Lpa owner, PageData data, Done done) {
    check_programmable(ppa);
    apply_program(ppa, owner, std::move(data));
    occupy_program(ppa, std::move(done));
}

void FlashStore::occupy_die(std::uint64_t die, Duration hold, Done done) {
    const SimTime grant = dies_.at(die).acquire(kernel_.now(), hold);
    const SimTime end = grant + hold;
    kernel_.schedule(end, sim::EventKind::DieDone, static_cast<std::uint32_t>(die), [end, done = std::move(done)] {
        if (done) {
            done(end);
        }
    });
}

void FlashStore::occupy_program(Ppa ppa, Done done) {
    const std::uint64_t d = codec_.die_of(ppa);
    const std::uint32_t c = codec_.channel_of(ppa);
    const SimTime grant = channels_[c].acquire(kernel_.now(), page_transfer_ns_);
    kernel_.schedule(grant + page_transfer_ns_, sim::EventKind::ChannelDone, c,
                     [this, d, done = std::move(done)]() mutable {
                         const SimTime g = dies_[d].acquire(kernel_.now(), latency_.t_wr_ns);
                         const SimTime end = g + latency_.t_wr_ns;
                         kernel_.schedule(end, sim::EventKind::FlashProgramDone, static_cast<std::uint32_t>(d),
                                          [end, done = std::move(done)] {
                                              if (done) {
                                                  done(end);
                                              }
                                          });
                     });
}

void FlashStore::erase_block(std::uint64_t block, Done done) {
    erase_untimed(block);
    const std::uint64_t d = codec_.die_of_block(block);
    const SimTime grant = dies_[d].acquire(kernel_.now(), latency_.t_erase_ns);
    const SimTime end = grant + latency_.t_erase_ns;
    kernel_.schedule(end, sim::EventKind::EraseDone, static_cast<std::uint32_t>(d), [end, done = std::move(done)] {
        if (done) {
            done(end);
        }
    });
}

void FlashStore::read_metadata(std::uint64_t die, Done done) {
    ++reads_;
    const std::uint32_t c = static_cast<std::uint32_t>(die / geometry_.dies_per_channel());
    const SimTime die_grant = dies_.at(die).acquire(kernel_.now(), latency_.t_rd_ns);
    kernel_.schedule(die_grant + latency_.t_rd_ns, sim::EventKind::DieDone, static_cast<std::uint32_t>(die),
                     [this, c, done = std::move(done)]() mutable {
                         const SimTime grant = channels_[c].acquire(kernel_.now(), page_transfer_ns_);
                         const SimTime end = grant + page_transfer_ns_;
                         kernel_.schedule(end, sim::EventKind::ChannelDone, c, [end, done = std::move(done)] {
                             if (done) {
                                 done(end);
                             }
                         });
                     });
}

} // namespace ssdtee::flash
