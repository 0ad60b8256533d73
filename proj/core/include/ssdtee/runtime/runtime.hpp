#pragma once

#include "ssdtee/cipher/engine.hpp"
#include "ssdtee/ftl/ftl.hpp"
#include "ssdtee/runtime/regions.hpp"
#include "ssdtee/secmem/secure_memory.hpp"
#include "ssdtee/sim/kernel.hpp"
#include "ssdtee/workloads/workloads.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ssdtee::runtime {

enum class TeeState : std::uint8_t { Creating, Ready, Running, Paused, Aborted, Terminated };
enum class AbortCause : std::uint8_t { AccessControlViolated, MetadataCorrupted, ProgramException };

[[nodiscard]] const char* to_string(TeeState s) noexcept;
[[nodiscard]] const char* to_string(AbortCause c) noexcept;
/// Creating->Ready->Running<->Paused, Running|Paused -> Aborted,
/// Running -> Terminated.
[[nodiscard]] bool transition_allowed(TeeState from, TeeState to) noexcept;

struct TeeCounters {
    std::uint64_t world_switches = 0;
    /// Switches charged by creation and termination.
    std::uint64_t lifecycle_switches = 0;
    std::uint64_t translations = 0;
    std::uint64_t mapping_misses = 0;
    std::uint64_t secure_reads = 0;
    std::uint64_t secure_writes = 0;
    std::uint64_t pages_loaded = 0;
    std::uint64_t flushes = 0;
    std::uint64_t records_done = 0;
};

/// What the TEE runs: a workload over a dataset, as a pre-generated trace.
struct WorkloadBinding {
    const workloads::WorkloadSpec* spec = nullptr;
    const workloads::Dataset* dataset = nullptr;
    std::shared_ptr<const workloads::AccessTrace> trace;
};

struct OffloadRequest {
    std::uint32_t tid = 0;
    std::uint64_t program_bytes = 64 * 1024;
    WorkloadBinding bin;
    /// Input pages, granted read-only.
    std::vector<Lpa> lpa;
    /// Pages the TEE may write (flush targets).
    std::vector<Lpa> output_lpa;
};

struct TeeDescriptor {
    std::uint32_t tid = 0;
    TeeId id;
    TeeState state = TeeState::Creating;
    std::vector<TeeState> history;
    std::uint64_t program_bytes = 0;
    std::vector<Lpa> lpa_grant;
    std::vector<Lpa> output_grant;
    ByteRange program;
    ByteRange heap;
    ByteRange ring;
    /// Descriptor and, after termination, the result copy.
    ByteRange metadata;
    TeeCounters counters;
    std::optional<std::vector<std::uint8_t>> result;
    std::optional<AbortCause> abort_cause;
    bool completed = false;
    bool retrieved = false;
    SimTime offloaded_at = 0;
    SimTime ready_at = 0;
    SimTime started_at = 0;
    SimTime finished_at = 0;
    SimTime ended_at = 0;
};

struct RuntimeConfig {
    /// False models plain in-storage computing: no cipher datapath, no
    /// secure memory, no lifecycle or world-switch costs, no ID checks.
    bool secure = true;
    std::uint32_t storage_cores = 4;
    std::uint32_t prefetch_window = 512;
    std::uint64_t heap_bytes = 16ULL << 20;
    Duration dram_line_ns = 5;
    RegionConfig regions;
    cipher::CipherTiming cipher;
    std::uint64_t key_seed = 0x1ce;

    void validate() const;
};

struct RuntimeStats {
    /// Core time spent on record compute.
    Duration compute_ns = 0;
    /// Core time for plain DRAM access and line streaming.
    Duration memory_ns = 0;
    /// Total time cores were held (includes DRAM-port waits).
    Duration core_busy_ns = 0;
    std::uint64_t records = 0;
    /// Successful translations of pages owned by someone other than the reader.
    std::uint64_t cross_tee_reads = 0;
    std::uint64_t dropped_events = 0;
};

/// In-storage TEE runtime. All TEEs are actors inside one kernel; the
/// storage cores, DRAM port, cipher engines and host link are shared.
///
/// Per input page the pipeline is: translate (mapping miss pauses the
/// issuer and costs two world switches plus a mapping-page read), flash
/// read, channel cipher engine, DMA into the TEE's input ring, then a
/// storage core runs the record: secure read of the page, compute, and the
/// record's heap operations. At most prefetch_window pages are in flight.
class Runtime {
public:
    using TidCallback = std::function<void(std::uint32_t tid)>;
    using ResultCallback = std::function<void(SimTime completion, const std::vector<std::uint8_t>& result)>;

    Runtime(sim::Kernel& kernel, ftl::Ftl& ftl, secmem::SecureMemory* secure_memory, RuntimeConfig config = {});
    ~Runtime();
    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    /// Transfers the program over the host link, creates the TEE and grants
    /// its LPAs. `on_ready` fires when it reaches Ready. Throws TidInUse,
    /// CreateFailed, PermissionDenied (an LPA owned by another TEE).
    std::uint32_t offload_code(OffloadRequest req, TidCallback on_ready = {});
    /// Starts a Ready TEE. `on_done` fires once on completion or abort.
    void run_tee(std::uint32_t tid, TidCallback on_done = {});
    void throw_out_tee(std::uint32_t tid, AbortCause cause);
    /// Copies the result to the secure region and tears the TEE down.
    void terminate_tee(std::uint32_t tid, TidCallback on_done = {});
    /// Transfers the result to the host. Throws NotReady, AlreadyRetrieved.
    void get_result(std::uint32_t tid, ResultCallback done);

    /// offload -> run -> terminate -> get_result, chained on the kernel.
    void submit(OffloadRequest req, ResultCallback done = {});

    [[nodiscard]] const TeeDescriptor& tee(std::uint32_t tid) const;
    [[nodiscard]] std::vector<std::uint32_t> tids() const;
    [[nodiscard]] const MemoryRegionMap& regions() const noexcept { return regions_; }
    [[nodiscard]] const RegionAllocator& normal_allocator() const noexcept { return normal_; }
    /// Bytes held by live TEEs (program + heap + ring).
    [[nodiscard]] std::uint64_t live_tee_bytes() const noexcept;
    [[nodiscard]] const RuntimeStats& stats() const noexcept { return stats_; }
    [[nodiscard]] const RuntimeConfig& config() const noexcept { return config_; }
    [[nodiscard]] sim::Resource& dram_port() noexcept { return dram_port_; }
    [[nodiscard]] sim::Resource& host_link() noexcept { return host_link_; }
    [[nodiscard]] secmem::SecureMemory* secure_memory() noexcept { return secmem_; }

    /// Lifecycle log: "<time> tee <tid> <state>" per transition.
    void set_trace(std::ostream* out) noexcept { trace_ = out; }

    /// Corrupts the TEE's secure metadata; its next secure access aborts it.
    void corrupt_metadata(std::uint32_t tid);
    /// Makes record `record` raise a program exception when issued.
    void inject_exception(std::uint32_t tid, std::uint64_t record);

private:
    struct Job {
        std::uint32_t tid = 0;
        std::uint64_t record = 0;
        std::uint32_t slot = 0;
    };
    struct Exec;

    TeeDescriptor& desc(std::uint32_t tid);
    Exec& exec(std::uint32_t tid);
    void set_state(TeeDescriptor& d, TeeState s);
    [[nodiscard]] bool live(std::uint32_t tid) const;
    TeeId allocate_id();
    void release_resources(TeeDescriptor& d);
    void release_secure_pages(TeeDescriptor& d, Exec& e);
    void log_state(const TeeDescriptor& d);

    void pump(std::uint32_t tid);
    void issue(std::uint32_t tid, std::uint64_t record, std::uint32_t slot, Ppa ppa, Duration delay);
    void page_arrived(std::uint32_t tid, std::uint64_t record, std::uint32_t slot, Ppa ppa,
                      const flash::PageData& data);
    void dispatch();
    void start_record(std::uint32_t core, Job job);
    void step(std::uint32_t core, Job job, std::uint32_t op);
    void finish_record(std::uint32_t core, Job job);
    void maybe_complete(std::uint32_t tid);
    void abort_from_pipeline(std::uint32_t tid, AbortCause cause);
    std::uint64_t ring_page(const TeeDescriptor& d, std::uint32_t slot) const;
    std::uint64_t heap_page(const TeeDescriptor& d, std::uint32_t page) const;
    /// Core-side memory access; returns its completion time or nullopt
    /// after aborting the TEE on an integrity failure.
    std::optional<SimTime> memory_access(std::uint32_t tid, std::uint64_t dram_page, std::uint32_t line,
                                         std::uint32_t lines, bool write, std::span<std::uint8_t> out = {});

    sim::Kernel& kernel_;
    ftl::Ftl& ftl_;
    flash::FlashStore& flash_;
    secmem::SecureMemory* secmem_;
    RuntimeConfig config_;
    MemoryRegionMap regions_;
    RegionAllocator normal_;
    RegionAllocator secure_;
    cipher::IvGenerator ivs_;
    cipher::CipherEngine engine_;
    std::vector<sim::Resource> cipher_units_;
    sim::Resource dram_port_{"dram-port"};
    sim::Resource host_link_{"host-link"};
    sim::Resource monitor_{"secure-monitor"};
    std::vector<bool> core_busy_;
    std::vector<SimTime> core_since_;
    std::deque<Job> ready_;
    std::map<std::uint32_t, TeeDescriptor> tees_;
    std::map<std::uint32_t, std::unique_ptr<Exec>> execs_;
    std::vector<bool> id_used_;
    RuntimeStats stats_;
    std::uint64_t next_gen_ = 0;
    std::ostream* trace_ = nullptr;
};

} // namespace ssdtee::runtime
