#include "ssdtee/error.hpp"
#include "ssdtee/runtime/runtime.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <sstream>

using namespace ssdtee;
using namespace ssdtee::runtime;
using workloads::Dataset;
using workloads::DatasetConfig;

namespace {

/// Kernel, device, FTL, secure memory and runtime wired together.
struct Rig {
    sim::Kernel kernel{1};
    flash::FlashStore flash;
    ftl::Ftl ftl;
    secmem::SecureMemory mem;
    Runtime rt;
    std::deque<Dataset> datasets;
    std::uint64_t next_lpa = 0;

    static secmem::SecureMemoryConfig mem_config(bool faithful) {
        secmem::SecureMemoryConfig c;
        c.functional = faithful;
        return c;
    }
    static RuntimeConfig rt_config(bool secure, RuntimeConfig base) {
        base.secure = secure;
        return base;
    }

    explicit Rig(bool secure = true, bool faithful = false, RuntimeConfig cfg = {},
                 flash::FlashGeometry geometry = {})
        : flash(kernel, geometry, flash::LatencyConfig{}, faithful), ftl(flash), mem(mem_config(faithful)),
          rt(kernel, ftl, &mem, rt_config(secure, cfg)) {}

    const Dataset& dataset(std::uint64_t pages, std::uint64_t seed = 1) {
        datasets.push_back(workloads::build_dataset(DatasetConfig{pages * Dataset::kPageBytes, next_lpa, seed}, ftl));
        next_lpa += pages + 64; // leave room for output pages
        return datasets.back();
    }

    static WorkloadBinding bind(const workloads::WorkloadSpec& spec, const Dataset& d, std::uint64_t seed = 1) {
        return WorkloadBinding{&spec, &d,
                               std::make_shared<const workloads::AccessTrace>(workloads::generate_trace(spec, d, seed))};
    }

    static OffloadRequest request(std::uint32_t tid, WorkloadBinding bin) {
        OffloadRequest r;
        r.tid = tid;
        r.lpa = bin.dataset->lpas();
        for (std::uint64_t i = 0; i < 16; ++i) {
            r.output_lpa.push_back(Lpa{bin.dataset->first_lpa() + bin.dataset->pages() + i});
        }
        r.bin = std::move(bin);
        return r;
    }

    std::uint64_t normal_size() const { return rt.regions().normal().size(); }
    bool heap_accounting_holds() const {
        return rt.live_tee_bytes() + rt.normal_allocator().free_bytes() == normal_size();
    }
};

const workloads::WorkloadSpec& spec(const char* name) { return workloads::find(name); }

void expect_sound_history(const TeeDescriptor& d) {
    ASSERT_FALSE(d.history.empty());
    EXPECT_EQ(d.history.front(), TeeState::Creating);
    for (std::size_t i = 1; i < d.history.size(); ++i) {
        EXPECT_TRUE(transition_allowed(d.history[i - 1], d.history[i]))
            << "tid " << d.tid << ": " << to_string(d.history[i - 1]) << " -> " << to_string(d.history[i]);
    }
    EXPECT_EQ(d.history.back(), d.state);
}

void expect_switch_identity(const TeeDescriptor& d) {
    EXPECT_EQ(d.counters.world_switches, 2 * d.counters.mapping_misses + d.counters.lifecycle_switches)
        << "tid " << d.tid;
}

} // namespace

TEST(Regions, LayoutIsDisjointAndFits) {
    const MemoryRegionMap m;
    EXPECT_FALSE(m.normal().overlaps(m.protected_region()));
    EXPECT_FALSE(m.normal().overlaps(m.secure()));
    EXPECT_FALSE(m.protected_region().overlaps(m.secure()));
    EXPECT_LE(m.normal().size() + m.protected_region().size() + m.secure().size(), m.capacity());
    EXPECT_EQ(m.capacity(), 4ULL << 30);
    EXPECT_EQ(m.protected_region().size(), 128ULL << 20);
}

TEST(Regions, OversizedCarveOutRejected) {
    RegionConfig c;
    c.dram_bytes = 128ULL << 20;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Regions, MappingCacheFitsProtectedRegion) {
    // Default cache: 1/16 of a 1 TiB device's table, 8 bytes per entry.
    const flash::FlashGeometry g;
    const std::uint64_t entries = g.total_pages() / 16;
    EXPECT_LE(entries * 8, MemoryRegionMap{}.protected_region().size());
}

TEST(Allocator, FirstFitAlignsAndCoalesces) {
    RegionAllocator a(ByteRange{0, 1 << 20});
    const auto x = a.allocate(100);
    const auto y = a.allocate(8192);
    const auto z = a.allocate(4096);
    ASSERT_TRUE(x && y && z);
    EXPECT_EQ(x->size(), 4096U);
    EXPECT_EQ(y->begin, 4096U);
    a.release(*y);
    const auto w = a.allocate(4096);
    EXPECT_EQ(w->begin, y->begin);
    a.release(*w);
    a.release(*x);
    a.release(*z);
    EXPECT_EQ(a.free_bytes(), 1U << 20);
    EXPECT_EQ(a.largest_free(), 1U << 20);
    EXPECT_FALSE(a.allocate(2 << 20).has_value());
}

TEST(Allocator, DoubleReleaseIsAnError) {
    RegionAllocator a(ByteRange{0, 1 << 20});
    const auto x = a.allocate(4096);
    a.release(*x);
    EXPECT_THROW(a.release(*x), std::invalid_argument);
}

TEST(Allocator, RandomChurnConservesSpace) {
    RegionAllocator a(ByteRange{1 << 20, 9 << 20});
    sim::Rng rng(3);
    std::vector<ByteRange> held;
    std::uint64_t held_bytes = 0;
    for (int i = 0; i < 3000; ++i) {
        if (held.empty() || rng.below(3) != 0) {
            if (auto r = a.allocate((rng.below(64) + 1) * 1000)) {
                for (const auto& h : held) {
                    ASSERT_FALSE(h.overlaps(*r));
                }
                held_bytes += r->size();
                held.push_back(*r);
            }
        } else {
            const auto k = rng.below(held.size());
            held_bytes -= held[k].size();
            a.release(held[k]);
            held.erase(held.begin() + static_cast<std::ptrdiff_t>(k));
        }
        ASSERT_EQ(a.free_bytes() + held_bytes, 8U << 20);
    }
}

TEST(Lifecycle, TransitionRelation) {
    using S = TeeState;
    const S all[] = {S::Creating, S::Ready, S::Running, S::Paused, S::Aborted, S::Terminated};
    int allowed = 0;
    for (S a : all) {
        for (S b : all) {
            allowed += transition_allowed(a, b);
        }
    }
    EXPECT_EQ(allowed, 7);
    EXPECT_TRUE(transition_allowed(S::Paused, S::Running));
    EXPECT_FALSE(transition_allowed(S::Paused, S::Terminated));
    EXPECT_FALSE(transition_allowed(S::Ready, S::Aborted));
    EXPECT_FALSE(transition_allowed(S::Terminated, S::Running));
}

TEST(Lifecycle, OffloadReachesReadyWithHeap) {
    Rig rig;
    const auto& d = rig.dataset(8);
    bool ready = false;
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)), [&](std::uint32_t) { ready = true; });
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Creating);
    rig.kernel.run_until_idle();
    ASSERT_TRUE(ready);
    const TeeDescriptor& t = rig.rt.tee(1);
    EXPECT_EQ(t.state, TeeState::Ready);
    EXPECT_EQ(t.heap.size(), 16ULL << 20);
    EXPECT_TRUE(rig.rt.regions().normal().contains(t.heap));
    EXPECT_TRUE(rig.rt.regions().secure().contains(t.metadata));
    // Program over the host link, then 95 us of creation.
    const Duration xfer = transfer_ns(64 * 1024, rig.flash.latency().host_link_bw_bytes_per_s);
    EXPECT_EQ(t.ready_at, xfer + 95'000);
    EXPECT_TRUE(rig.heap_accounting_holds());
    // Input pages are now read-only and owned by the TEE.
    EXPECT_EQ(rig.ftl.entry(d.lpa(0)).tee_id(), t.id);
    EXPECT_TRUE(rig.ftl.entry(d.lpa(0)).read_only());
}

TEST(Lifecycle, ProgramLargerThanNormalRegionFails) {
    Rig rig;
    const auto& d = rig.dataset(8);
    auto req = Rig::request(1, Rig::bind(spec("arithmetic"), d));
    req.program_bytes = rig.normal_size() + 4096;
    EXPECT_THROW(rig.rt.offload_code(req), CreateFailed);
    EXPECT_TRUE(rig.heap_accounting_holds());
    EXPECT_EQ(rig.rt.normal_allocator().free_bytes(), rig.normal_size());
    EXPECT_TRUE(rig.ftl.entry(d.lpa(0)).tee_id().is_ftl());
}

TEST(Lifecycle, ExhaustedNormalRegionFails) {
    RuntimeConfig cfg;
    cfg.regions.dram_bytes = 512ULL << 20; // normal = 320 MiB
    Rig rig(true, false, cfg);
    const auto& d = rig.dataset(0);
    std::uint32_t made = 0;
    try {
        for (std::uint32_t tid = 1; tid < 100; ++tid) {
            auto req = Rig::request(tid, Rig::bind(spec("arithmetic"), d));
            req.output_lpa.clear();
            rig.rt.offload_code(req);
            ++made;
        }
        FAIL() << "normal region never ran out";
    } catch (const CreateFailed&) {
    }
    // Each TEE holds 64 KiB of program, 16 MiB of heap and a 2 MiB ring.
    EXPECT_EQ(made, (320ULL << 20) / ((64ULL << 10) + (16ULL << 20) + (2ULL << 20)));
    EXPECT_TRUE(rig.heap_accounting_holds());
}

TEST(Lifecycle, DuplicateTidRejected) {
    Rig rig;
    const auto& d = rig.dataset(8);
    rig.rt.offload_code(Rig::request(5, Rig::bind(spec("arithmetic"), d)));
    auto again = Rig::request(5, Rig::bind(spec("arithmetic"), d));
    again.lpa.clear();
    EXPECT_THROW(rig.rt.offload_code(again), TidInUse);
}

TEST(Lifecycle, OverlappingGrantIsDenied) {
    Rig rig;
    const auto& d = rig.dataset(8);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    const auto before = rig.rt.normal_allocator().free_bytes();
    EXPECT_THROW(rig.rt.offload_code(Rig::request(2, Rig::bind(spec("arithmetic"), d))), PermissionDenied);
    EXPECT_EQ(rig.rt.normal_allocator().free_bytes(), before);
    EXPECT_THROW((void)rig.rt.tee(2), InvalidState);
}

TEST(Lifecycle, TwoTeesGetDisjointHeaps) {
    Rig rig;
    const auto& a = rig.dataset(8);
    const auto& b = rig.dataset(8, 2);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), a)));
    rig.rt.offload_code(Rig::request(2, Rig::bind(spec("arithmetic"), b)));
    rig.kernel.run_until_idle();
    const auto& t1 = rig.rt.tee(1);
    const auto& t2 = rig.rt.tee(2);
    EXPECT_FALSE(t1.heap.overlaps(t2.heap));
    EXPECT_FALSE(t1.heap.overlaps(t2.ring));
    EXPECT_FALSE(t1.metadata.overlaps(t2.metadata));
    EXPECT_NE(t1.id, t2.id);
    // Creation goes through one secure monitor.
    EXPECT_EQ(t2.ready_at - t1.ready_at, 95'000U);
}

TEST(Lifecycle, ZeroRecordProgramCostsOnlyLifecycle) {
    Rig rig;
    const auto& d = rig.dataset(0);
    SimTime delivered = 0;
    std::vector<std::uint8_t> blob;
    rig.rt.submit(Rig::request(1, Rig::bind(spec("arithmetic"), d)), [&](SimTime t, const auto& r) {
        delivered = t;
        blob = r;
    });
    rig.kernel.run_until_idle();
    const auto bw = rig.flash.latency().host_link_bw_bytes_per_s;
    EXPECT_EQ(delivered, transfer_ns(64 * 1024, bw) + 95'000 + 58'000 + transfer_ns(blob.size(), bw));
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Terminated);
    EXPECT_EQ(rig.rt.tee(1).counters.world_switches, 2U);
}

TEST(Lifecycle, DeletionTakes58us) {
    Rig rig;
    const auto& d = rig.dataset(16);
    rig.rt.submit(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    EXPECT_EQ(t.ended_at - t.finished_at, 58'000U);
    EXPECT_TRUE(t.heap.empty());
    EXPECT_TRUE(rig.heap_accounting_holds());
    EXPECT_EQ(rig.rt.normal_allocator().free_bytes(), rig.normal_size());
    // Grants go back to the FTL.
    EXPECT_TRUE(rig.ftl.entry(d.lpa(3)).tee_id().is_ftl());
    expect_sound_history(t);
}

TEST(Lifecycle, LogNamesEveryTransition) {
    Rig rig;
    std::ostringstream log;
    rig.rt.set_trace(&log);
    const auto& d = rig.dataset(4);
    rig.rt.submit(Rig::request(3, Rig::bind(spec("filter"), d)));
    rig.kernel.run_until_idle();
    const std::string s = log.str();
    for (const char* state : {"creating", "ready", "running", "paused", "terminated"}) {
        EXPECT_NE(s.find(std::string(" tee 3 ") + state), std::string::npos) << state;
    }
}

TEST(Lifecycle, StateChecksOnEveryCall) {
    Rig rig;
    const auto& d = rig.dataset(4);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    EXPECT_THROW(rig.rt.run_tee(1), InvalidState);         // still Creating
    EXPECT_THROW(rig.rt.terminate_tee(1), InvalidState);   // not complete
    EXPECT_THROW(rig.rt.get_result(1, {}), NotReady);
    EXPECT_THROW(rig.rt.throw_out_tee(1, AbortCause::ProgramException), InvalidState);
    rig.kernel.run_until_idle();
    rig.rt.run_tee(1);
    EXPECT_THROW(rig.rt.run_tee(1), InvalidState);
    EXPECT_THROW(rig.rt.get_result(1, {}), NotReady); // Running
    rig.kernel.run_until_idle();
    ASSERT_TRUE(rig.rt.tee(1).completed);
    rig.rt.terminate_tee(1);
    EXPECT_THROW(rig.rt.terminate_tee(1), InvalidState);
    rig.kernel.run_until_idle();
    EXPECT_THROW(rig.rt.terminate_tee(1), InvalidState);
    EXPECT_THROW(rig.rt.throw_out_tee(1, AbortCause::ProgramException), InvalidState);
    int calls = 0;
    rig.rt.get_result(1, [&](SimTime, const auto&) { ++calls; });
    EXPECT_THROW(rig.rt.get_result(1, {}), AlreadyRetrieved);
    rig.kernel.run_until_idle();
    EXPECT_EQ(calls, 1);
    EXPECT_THROW((void)rig.rt.tee(77), InvalidState);
    expect_sound_history(rig.rt.tee(1));
}

TEST(Lifecycle, ResultTransferIsBandwidthArithmetic) {
    Rig rig;
    const auto& d = rig.dataset(4);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("tpch-q1"), d)));
    rig.kernel.run_until_idle();
    rig.rt.run_tee(1);
    rig.kernel.run_until_idle();
    rig.rt.terminate_tee(1);
    rig.kernel.run_until_idle();
    const SimTime asked = rig.kernel.now();
    SimTime got = 0;
    std::size_t bytes = 0;
    rig.rt.get_result(1, [&](SimTime t, const auto& r) {
        got = t;
        bytes = r.size();
    });
    rig.kernel.run_until_idle();
    EXPECT_EQ(bytes, 96U);
    EXPECT_EQ(got - asked, transfer_ns(bytes, rig.flash.latency().host_link_bw_bytes_per_s));
    EXPECT_EQ(transfer_ns(1 << 20, 3'200'000'000ULL), 327'680U);
}

TEST(Lifecycle, TidReusableAfterRetrieval) {
    Rig rig;
    const auto& d = rig.dataset(4);
    rig.rt.submit(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    rig.kernel.run_until_idle();
    rig.rt.submit(Rig::request(1, Rig::bind(spec("aggregation"), d)));
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Terminated);
    EXPECT_EQ(*rig.rt.tee(1).result, workloads::evaluate(spec("aggregation"), d));
}

TEST(Pipeline, SingleWarmRecordIsAdditive) {
    Rig rig;
    const auto& d = rig.dataset(1);
    (void)rig.ftl.translate(d.lpa(0), kFtlTeeId); // warm the mapping cache
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    rig.kernel.run_until_idle();
    rig.rt.run_tee(1);
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    ASSERT_TRUE(t.completed);
    EXPECT_EQ(t.counters.mapping_misses, 0U);
    const auto& lat = rig.flash.latency();
    const Duration translate = lat.dram_access_ns;
    const Duration cipher = 320;
    // The DMA load leaves the counter line cached, so the core's read of
    // the 64 lines streams them (5 ns each) and then hits: 50 + 60 + 40.
    const Duration secure_read = 64 * 5 + 150;
    const Duration compute = 64 * spec("arithmetic").storage_compute_ns_per_record;
    EXPECT_EQ(t.finished_at - t.started_at,
              translate + lat.t_rd_ns + rig.flash.page_transfer_ns() + cipher + secure_read + compute);
}

TEST(Pipeline, IscSkipsTheCipherAndSecureMemory) {
    Rig rig(false);
    const auto& d = rig.dataset(1);
    (void)rig.ftl.translate(d.lpa(0), kFtlTeeId);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)));
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).ready_at, transfer_ns(64 * 1024, rig.flash.latency().host_link_bw_bytes_per_s));
    rig.rt.run_tee(1);
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    const auto& lat = rig.flash.latency();
    EXPECT_EQ(t.finished_at - t.started_at,
              lat.dram_access_ns + lat.t_rd_ns + rig.flash.page_transfer_ns() + 64 * 5 + lat.dram_access_ns + 512);
    EXPECT_EQ(t.counters.world_switches, 0U);
    EXPECT_EQ(rig.mem.stats().reads, 0U);
}

TEST(Pipeline, ColdScanPausesOncePerMappingFrame) {
    Rig rig;
    const auto& d = rig.dataset(4096);
    rig.rt.submit(Rig::request(1, Rig::bind(spec("aggregation"), d)));
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    EXPECT_EQ(t.counters.translations, 4096U);
    EXPECT_EQ(t.counters.mapping_misses, 4096U / 512);
    EXPECT_EQ(t.counters.pages_loaded, 4096U);
    EXPECT_EQ(t.counters.secure_reads, 4096U);
    EXPECT_EQ(t.counters.lifecycle_switches, 2U);
    expect_switch_identity(t);
    expect_sound_history(t);
    EXPECT_EQ(std::count(t.history.begin(), t.history.end(), TeeState::Paused), 8);
    EXPECT_EQ(*t.result, workloads::evaluate(spec("aggregation"), d));
}

TEST(Pipeline, WriteHeavyFlushesToGrantedPages) {
    Rig rig;
    const auto& d = rig.dataset(512);
    rig.rt.submit(Rig::request(1, Rig::bind(spec("tpcc"), d)));
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    ASSERT_EQ(t.state, TeeState::Terminated);
    EXPECT_GT(t.counters.secure_writes, 0U);
    EXPECT_EQ(t.counters.flushes, Rig::bind(spec("tpcc"), d).trace->flushes());
    EXPECT_TRUE(rig.ftl.entry(Lpa{d.first_lpa() + d.pages()}).valid());
    EXPECT_GE(t.finished_at, t.started_at);
    EXPECT_EQ(rig.ftl.audit(), "");
}

TEST(Pipeline, FlushWithoutOutputGrantAborts) {
    Rig rig;
    const auto& d = rig.dataset(512);
    auto req = Rig::request(1, Rig::bind(spec("tpcc"), d));
    req.output_lpa.clear();
    rig.rt.submit(req);
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Aborted);
    EXPECT_EQ(*rig.rt.tee(1).abort_cause, AbortCause::ProgramException);
}

TEST(Aborts, AccessToAnotherTeesPagesAborts) {
    Rig rig;
    const auto& mine = rig.dataset(32);
    const auto& theirs = rig.dataset(32, 2);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), theirs)));
    // TEE 2 holds a grant on its own pages but its program reads TEE 1's.
    auto req = Rig::request(2, Rig::bind(spec("arithmetic"), theirs));
    req.lpa = mine.lpas();
    req.output_lpa.clear();
    bool done = false;
    rig.rt.offload_code(req, [&](std::uint32_t tid) { rig.rt.run_tee(tid, [&](std::uint32_t) { done = true; }); });
    rig.kernel.run_until_idle();
    ASSERT_TRUE(done);
    const auto& t = rig.rt.tee(2);
    EXPECT_EQ(t.state, TeeState::Aborted);
    EXPECT_EQ(*t.abort_cause, AbortCause::AccessControlViolated);
    EXPECT_FALSE(t.result.has_value());
    EXPECT_EQ(t.counters.pages_loaded, 0U);
    EXPECT_EQ(rig.rt.stats().cross_tee_reads, 0U);
    EXPECT_TRUE(rig.heap_accounting_holds());
    EXPECT_TRUE(t.heap.empty());
    expect_sound_history(t);
    // TEE 1's grant is untouched; TEE 2's is released.
    EXPECT_EQ(rig.ftl.entry(theirs.lpa(0)).tee_id(), rig.rt.tee(1).id);
    EXPECT_TRUE(rig.ftl.entry(mine.lpa(0)).tee_id().is_ftl());
}

TEST(Aborts, ProgramExceptionReleasesEverything) {
    Rig rig;
    const auto& d = rig.dataset(2048);
    const std::uint64_t normal_free = rig.rt.normal_allocator().free_bytes();
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("tpch-q3"), d)), [&](std::uint32_t tid) {
        rig.rt.run_tee(tid);
        rig.rt.inject_exception(tid, 1500);
    });
    rig.kernel.run_until_idle();
    const auto& t = rig.rt.tee(1);
    EXPECT_EQ(t.state, TeeState::Aborted);
    EXPECT_EQ(*t.abort_cause, AbortCause::ProgramException);
    EXPECT_FALSE(t.result.has_value());
    EXPECT_LT(t.counters.records_done, 2048U);
    EXPECT_EQ(rig.rt.normal_allocator().free_bytes(), normal_free);
    EXPECT_THROW(rig.rt.get_result(1, {}), NotReady);
    expect_sound_history(t);
}

TEST(Aborts, NoEventTouchesAnAbortedHeap) {
    Rig rig;
    const auto& d = rig.dataset(2048);
    ByteRange heap;
    ByteRange ring;
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("tpch-q12"), d)), [&](std::uint32_t tid) {
        heap = rig.rt.tee(tid).heap;
        ring = rig.rt.tee(tid).ring;
        rig.rt.run_tee(tid);
        // Abort while pages and records are in flight.
        rig.kernel.schedule_after(400'000, sim::EventKind::Generic, tid,
                                  [&, tid] { rig.rt.throw_out_tee(tid, AbortCause::ProgramException); });
    });
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Aborted);
    EXPECT_GT(rig.rt.stats().dropped_events, 0U);
    const auto reads = rig.mem.stats().reads;
    const auto writes = rig.mem.stats().writes;
    for (std::uint64_t p = heap.begin / 4096; p < heap.end / 4096; ++p) {
        ASSERT_FALSE(rig.mem.registered(p));
    }
    for (std::uint64_t p = ring.begin / 4096; p < ring.end / 4096; ++p) {
        ASSERT_FALSE(rig.mem.registered(p));
    }
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.mem.stats().reads, reads);
    EXPECT_EQ(rig.mem.stats().writes, writes);
}

TEST(Aborts, MetadataCorruptionInTimingMode) {
    Rig rig;
    const auto& d = rig.dataset(1024);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)), [&](std::uint32_t tid) {
        rig.rt.run_tee(tid);
        rig.kernel.schedule_after(200'000, sim::EventKind::Generic, tid, [&, tid] { rig.rt.corrupt_metadata(tid); });
    });
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Aborted);
    EXPECT_EQ(*rig.rt.tee(1).abort_cause, AbortCause::MetadataCorrupted);
}

TEST(Aborts, RealCounterTamperIsCaughtByTheTree) {
    Rig rig(true, true);
    const auto& d = rig.dataset(1024);
    rig.rt.offload_code(Rig::request(1, Rig::bind(spec("arithmetic"), d)), [&](std::uint32_t tid) {
        rig.rt.run_tee(tid);
        rig.kernel.schedule_after(200'000, sim::EventKind::Generic, tid, [&, tid] { rig.rt.corrupt_metadata(tid); });
    });
    rig.kernel.run_until_idle();
    EXPECT_EQ(rig.rt.tee(1).state, TeeState::Aborted);
    EXPECT_EQ(*rig.rt.tee(1).abort_cause, AbortCause::MetadataCorrupted);
}

TEST(MultiTenant, ResultsMatchSoloRuns) {
    const char* names[] = {"filter", "tpch-q14", "tpcb", "aggregation"};
    auto run = [&](std::vector<std::uint32_t> which) {
        Rig rig;
        std::vector<const Dataset*> ds;
        for (std::uint32_t i = 0; i < 4; ++i) {
            ds.push_back(&rig.dataset(600, 10 + i)); // same layout regardless of who runs
        }
        for (auto i : which) {
            rig.rt.submit(Rig::request(i + 1, Rig::bind(spec(names[i]), *ds[i], i)));
        }
        rig.kernel.run_until_idle();
        std::map<std::uint32_t, std::vector<std::uint8_t>> out;
        for (auto i : which) {
            const auto& t = rig.rt.tee(i + 1);
            EXPECT_EQ(t.state, TeeState::Terminated);
            expect_switch_identity(t);
            expect_sound_history(t);
            out[i] = *t.result;
        }
        EXPECT_EQ(rig.rt.stats().cross_tee_reads, 0U);
        EXPECT_TRUE(rig.heap_accounting_holds());
        return out;
    };
    std::map<std::uint32_t, std::vector<std::uint8_t>> solo;
    for (std::uint32_t i = 0; i < 4; ++i) {
        solo[i] = run({i})[i];
    }
    EXPECT_EQ(run({0, 1}), (std::map<std::uint32_t, std::vector<std::uint8_t>>{{0, solo[0]}, {1, solo[1]}}));
    EXPECT_EQ(run({0, 1, 2, 3}), solo);
}

TEST(MultiTenant, DisjointChannelsOverlapButContend) {
    // Each TEE reads only pages on its half of the channels.
    auto trace_on = [](const workloads::WorkloadSpec& s, const Dataset& d, std::uint32_t lo) {
        auto t = workloads::generate_trace(s, d, 1);
        std::vector<workloads::TraceRecord> keep;
        for (const auto& r : t.records) {
            if (d.lpa(r.page).value % 8 / 4 == lo) {
                keep.push_back(r);
            }
        }
        t.records = keep;
        return std::make_shared<const workloads::AccessTrace>(std::move(t));
    };
    auto run = [&](bool a, bool b) {
        Rig rig;
        const auto& da = rig.dataset(2048);
        rig.next_lpa = 4096;
        const auto& db = rig.dataset(2048, 2);
        if (a) {
            auto req = Rig::request(1, WorkloadBinding{&spec("arithmetic"), &da, trace_on(spec("arithmetic"), da, 0)});
            rig.rt.submit(req);
        }
        if (b) {
            auto req = Rig::request(2, WorkloadBinding{&spec("arithmetic"), &db, trace_on(spec("arithmetic"), db, 1)});
            rig.rt.submit(req);
        }
        return rig.kernel.run_until_idle();
    };
    const SimTime a = run(true, false);
    const SimTime b = run(false, true);
    const SimTime both = run(true, true);
    EXPECT_LT(both, a + b);
    EXPECT_GT(both, std::max(a, b));
}

TEST(Faithful, EveryWorkloadSurvivesTheFullPipeline) {
    for (bool secure : {true, false}) {
        for (const auto& s : workloads::registry()) {
            Rig rig(secure, true);
            const auto& d = rig.dataset(96, 4);
            std::vector<std::uint8_t> blob;
            rig.rt.submit(Rig::request(1, Rig::bind(s, d)), [&](SimTime, const auto& r) { blob = r; });
            rig.kernel.run_until_idle();
            EXPECT_TRUE(workloads::verify_result(s, d, blob)) << s.name << (secure ? " secure" : " isc");
            if (secure) {
                EXPECT_NO_THROW(rig.mem.verify_root(secmem::Tree::ReadOnly));
                EXPECT_NO_THROW(rig.mem.verify_root(secmem::Tree::Writable));
            }
        }
    }
}

TEST(Faithful, PagesCrossTheChannelEncrypted) {
    // A faithful run reads the bytes written at load time; the reducer sees
    // plaintext only after the in-TEE decrypt.
    Rig rig(true, true);
    const auto& d = rig.dataset(40, 9);
    rig.rt.submit(Rig::request(1, Rig::bind(spec("wordcount"), d)));
    rig.kernel.run_until_idle();
    EXPECT_EQ(*rig.rt.tee(1).result, workloads::evaluate(spec("wordcount"), d));
    EXPECT_GT(rig.mem.stats().loads, 0U);
}

TEST(Determinism, SameSeedSameTrace) {
    auto run = [] {
        Rig rig;
        std::ostringstream trace;
        rig.kernel.set_trace(&trace);
        rig.rt.set_trace(&trace);
        const auto& d = rig.dataset(700);
        rig.rt.submit(Rig::request(1, Rig::bind(spec("tpcb"), d)));
        rig.rt.submit(Rig::request(2, Rig::bind(spec("filter"), rig.dataset(300, 3))));
        rig.kernel.run_until_idle();
        return trace.str();
    };
    const auto a = run();
    EXPECT_EQ(a, run());
    EXPECT_GT(a.size(), 1000U);
}
