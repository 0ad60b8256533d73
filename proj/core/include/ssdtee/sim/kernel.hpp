#pragma once

#include "ssdtee/sim/rng.hpp"
#include "ssdtee/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace ssdtee::sim {

enum class EventKind : std::uint8_t {
    Generic,
    TeeLifecycle,
    TranslateIssue,
    MappingMiss,
    WorldSwitch,
    DieDone,
    ChannelDone,
    CipherDone,
    HostLinkDone,
    CoreDone,
    FlashProgramDone,
    EraseDone,
};

std::string_view to_string(EventKind kind) noexcept;

using Action = std::function<void()>;

struct SimEvent {
    SimTime fire_at = 0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::Generic;
    std::uint32_t actor = 0;
    Action action;
};

/// A serially-contended resource (flash channel, die, core, DRAM port, link).
///
/// Grants are issued in call order: a caller acquiring at `now` is served
/// after every earlier caller, so the FIFO queue is implicit in busy_until.
/// Callers must acquire at the simulated instant they arrive, which the
/// event loop guarantees when acquisitions happen inside event actions.
class Resource {
public:
    explicit Resource(std::string name = {}) : name_(std::move(name)) {}

    /// Returns the grant time (>= now) and advances busy_until by hold_ns.
    SimTime acquire(SimTime now, Duration hold_ns);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] SimTime busy_until() const noexcept { return busy_until_; }
    [[nodiscard]] Duration utilization_ns() const noexcept { return utilization_ns_; }
    [[nodiscard]] std::uint64_t grants() const noexcept { return grants_; }
    /// Total time callers spent waiting for a grant.
    [[nodiscard]] Duration wait_ns() const noexcept { return wait_ns_; }

private:
    std::string name_;
    SimTime busy_until_ = 0;
    Duration utilization_ns_ = 0;
    Duration wait_ns_ = 0;
    std::uint64_t grants_ = 0;
};

/// Deterministic discrete-event engine.
///
/// Events fire in (fire_at, sequence) order; sequence is the insertion
/// counter, so ties resolve in scheduling order and a run is reproducible
/// for a fixed configuration and seed.
class Kernel {
public:
    static constexpr std::uint64_t kDefaultEventCap = 1'000'000'000ULL;

    explicit Kernel(std::uint64_t seed = 1, std::uint64_t event_cap = kDefaultEventCap);

    [[nodiscard]] SimTime now() const noexcept { return now_; }

    /// Enqueues an event; returns its sequence number.
    /// Throws SchedulingInPast if fire_at < now().
    std::uint64_t schedule(SimTime fire_at, EventKind kind, std::uint32_t actor, Action action);

    std::uint64_t schedule_after(Duration delay, EventKind kind, std::uint32_t actor, Action action) {
        return schedule(now_ + delay, kind, actor, std::move(action));
    }

    /// Dispatches every pending event and returns the final clock.
    /// Throws EventLimitExceeded when the dispatch cap is hit.
    SimTime run_until_idle();

    [[nodiscard]] bool idle() const noexcept { return queue_.empty(); }
    [[nodiscard]] std::uint64_t dispatched() const noexcept { return dispatched_; }
    [[nodiscard]] std::uint64_t pending() const noexcept { return queue_.size(); }

    Rng& rng() noexcept { return rng_; }

    /// Optional line-oriented trace: "<fire_at> <sequence> <kind> <actor>".
    void set_trace(std::ostream* out) noexcept { trace_ = out; }
    /// FNV-1a digest over every dispatched (fire_at, sequence, kind, actor).
    [[nodiscard]] std::uint64_t trace_digest() const noexcept { return digest_; }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const noexcept {
            if (a.fire_at != b.fire_at) {
                return a.fire_at > b.fire_at;
            }
            return a.sequence > b.sequence;
        }
    };

    void record(const SimEvent& ev);

    SimTime now_ = 0;
    std::uint64_t next_sequence_ = 1;
    std::uint64_t dispatched_ = 0;
    std::uint64_t event_cap_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    Rng rng_;
    std::ostream* trace_ = nullptr;
    std::uint64_t digest_ = 0xcbf29ce484222325ULL;
};

} // namespace ssdtee::sim
