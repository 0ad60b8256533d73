#include "ssdtee/sim/kernel.hpp"

#include "ssdtee/error.hpp"

#include <ostream>

namespace ssdtee::sim {

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
    case EventKind::Generic: return "generic";
    case EventKind::TeeLifecycle: return "tee_lifecycle";
    case EventKind::TranslateIssue: return "translate";
    case EventKind::MappingMiss: return "mapping_miss";
    case EventKind::WorldSwitch: return "world_switch";
    case EventKind::DieDone: return "die_done";
    case EventKind::ChannelDone: return "channel_done";
    case EventKind::CipherDone: return "cipher_done";
    case EventKind::HostLinkDone: return "host_link_done";
    case EventKind::CoreDone: return "core_done";
    case EventKind::FlashProgramDone: return "program_done";
    case EventKind::EraseDone: return "erase_done";
    }
    return "unknown";
}

SimTime Resource::acquire(SimTime now, Duration hold_ns) {
    const SimTime grant = busy_until_ > now ? busy_until_ : now;
    wait_ns_ += grant - now;
    busy_until_ = grant + hold_ns;
    utilization_ns_ += hold_ns;
    ++grants_;
    return grant;
}

Kernel::Kernel(std::uint64_t seed, std::uint64_t event_cap) : event_cap_(event_cap), rng_(seed) {}

std::uint64_t Kernel::schedule(SimTime fire_at, EventKind kind, std::uint32_t actor, Action action) {
    if (fire_at < now_) {
        throw SchedulingInPast("event at t=" + std::to_string(fire_at) + " scheduled with clock at " +
                               std::to_string(now_));
    }
    const std::uint64_t seq = next_sequence_++;
    queue_.push(SimEvent{fire_at, seq, kind, actor, std::move(action)});
    return seq;
}

void Kernel::record(const SimEvent& ev) {
    auto fold = [this](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            digest_ ^= (v >> (8 * i)) & 0xffU;
            digest_ *= 0x100000001b3ULL;
        }
    };
    fold(ev.fire_at);
    fold(ev.sequence);
    fold(static_cast<std::uint64_t>(ev.kind));
    fold(ev.actor);
    if (trace_ != nullptr) {
        *trace_ << ev.fire_at << ' ' << ev.sequence << ' ' << to_string(ev.kind) << ' ' << ev.actor << '\n';
    }
}

SimTime Kernel::run_until_idle() {
    while (!queue_.empty()) {
        if (dispatched_ >= event_cap_) {
            throw EventLimitExceeded("event cap of " + std::to_string(event_cap_) + " dispatched events reached");
        }
        // Moving leaves fire_at/sequence intact, which is all pop() compares.
        SimEvent ev = std::move(const_cast<SimEvent&>(queue_.top()));
        queue_.pop();
        now_ = ev.fire_at;
        ++dispatched_;
        record(ev);
        if (ev.action) {
            ev.action();
        }
    }
    return now_;
}

} // namespace ssdtee::sim
