#include "ssdtee/bench/scenario.hpp"

#include "ssdtee/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>

namespace ssdtee::bench {

namespace {

constexpr std::uint64_t kOutputPages = 64;
constexpr std::uint32_t kLinesPerPage = 64;
constexpr double kRecordsPerPage = workloads::Dataset::kPageBytes / workloads::kRecordBytes;

std::uint64_t digest_of(const std::vector<std::uint8_t>& blob) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : blob) {
        h = (h ^ b) * 0x100000001b3ULL;
    }
    return h;
}

double ratio(std::uint64_t part, std::uint64_t whole) {
    return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

/// Device plus the tenants' datasets and traces, shared by all scenarios.
struct Bed {
    sim::Kernel kernel;
    flash::FlashStore flash;
    ftl::Ftl ftl;
    std::deque<workloads::WorkloadSpec> specs;
    std::deque<workloads::Dataset> datasets;
    std::vector<std::shared_ptr<const workloads::AccessTrace>> traces;
    std::vector<std::vector<Lpa>> outputs;

    Bed(const RunConfig& cfg, const std::string& workload)
        : kernel(cfg.seed), flash(kernel, cfg.geometry, cfg.latency, cfg.faithful), ftl(flash, effective_ftl(cfg)) {
        const std::uint64_t pages = ceil_div(cfg.dataset_bytes, std::uint64_t{workloads::Dataset::kPageBytes});
        std::uint64_t next = 0;
        for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
            specs.push_back(resolve_workload(cfg, workload));
            const workloads::DatasetConfig dc{cfg.dataset_bytes, next, cfg.seed + t};
            datasets.push_back(workloads::build_dataset(dc, ftl));
            const std::uint32_t heap_pages = static_cast<std::uint32_t>(cfg.runtime.heap_bytes / 4096);
            traces.push_back(std::make_shared<const workloads::AccessTrace>(
                workloads::generate_trace(specs.back(), datasets.back(), sim::Rng::mix(cfg.seed ^ (t + 1)), heap_pages)));
            std::vector<Lpa> out;
            for (std::uint64_t i = 0; i < kOutputPages; ++i) {
                out.push_back(Lpa{next + pages + i});
            }
            outputs.push_back(std::move(out));
            next += pages + kOutputPages;
        }
    }
};

void fill_common(RunReport& r, const RunConfig& cfg, Scenario s, const std::string& workload) {
    r.scenario = to_string(s);
    r.workload = workload;
    r.tenants = cfg.tenants;
    r.channels = cfg.geometry.channels;
    r.t_rd_ns = cfg.latency.t_rd_ns;
    r.dram_bytes = cfg.runtime.regions.dram_bytes;
    r.dataset_bytes = cfg.dataset_bytes;
    r.seed = cfg.seed;
}

std::string check_result(const RunConfig& cfg, const workloads::WorkloadSpec& spec, const workloads::Dataset& d,
                         const std::vector<std::uint8_t>& blob) {
    if (!cfg.faithful) {
        return "skipped";
    }
    return workloads::verify_result(spec, d, blob) ? "pass" : "fail";
}

// ---- host ----

/// Reads every tenant's pages over the host link, then computes on one
/// host core, then writes flushed pages back.
RunReport run_host(const RunConfig& cfg, Scenario scenario, const std::string& workload, std::ostream* trace) {
    Bed bed(cfg, workload);
    bed.kernel.set_trace(trace);
    const auto& lat = cfg.latency;
    const Duration page_xfer = transfer_ns(4096, lat.host_link_bw_bytes_per_s);
    sim::Resource link("host-link");

    struct Stream {
        std::unique_ptr<workloads::Reducer> reducer;
        std::uint64_t next = 0;
        std::uint64_t inflight = 0;
        std::uint64_t arrived = 0;
        bool blocked = false;
        std::uint64_t translations = 0;
        std::uint64_t misses = 0;
    };
    std::vector<Stream> streams(cfg.tenants);
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        streams[t].reducer = workloads::make_reducer(bed.specs[t], bed.datasets[t]);
    }

    std::function<void(std::uint32_t)> pump;
    auto read = [&](std::uint32_t t, std::uint64_t rec, Ppa ppa) {
        bed.flash.read_page(ppa, [&, t, rec](SimTime, const flash::PageData& data) {
            const SimTime done = link.acquire(bed.kernel.now(), page_xfer) + page_xfer;
            std::vector<std::uint8_t> bytes = data.bytes;
            bed.kernel.schedule(done, sim::EventKind::HostLinkDone, t, [&, t, rec, bytes = std::move(bytes)]() mutable {
                Stream& s = streams[t];
                const auto page = bed.traces[t]->records[rec].page;
                if (bytes.empty()) {
                    bytes = bed.datasets[t].page(page);
                }
                s.reducer->consume(page, bytes);
                --s.inflight;
                ++s.arrived;
                pump(t);
            });
        });
    };
    pump = [&](std::uint32_t t) {
        Stream& s = streams[t];
        const auto& recs = bed.traces[t]->records;
        while (!s.blocked && s.next < recs.size() && s.inflight < cfg.host.queue_depth) {
            const std::uint64_t rec = s.next++;
            ++s.inflight;
            ++s.translations;
            const auto tr = bed.ftl.translate(bed.datasets[t].lpa(recs[rec].page), kFtlTeeId);
            if (tr.from == ftl::ServicedFrom::Cache) {
                bed.kernel.schedule_after(tr.latency, sim::EventKind::TranslateIssue, t,
                                          [&, t, rec, ppa = tr.ppa] { read(t, rec, ppa); });
                continue;
            }
            // The host-side FTL reads the mapping page itself; no world switch.
            ++s.misses;
            s.blocked = true;
            bed.flash.read_metadata(bed.ftl.frame_die(tr.frame), [&, t, rec, ppa = tr.ppa](SimTime) {
                streams[t].blocked = false;
                read(t, rec, ppa);
                pump(t);
            });
            return;
        }
    };
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        pump(t);
    }
    const SimTime load_end = bed.kernel.run_until_idle();

    // Compute phase on one host core; memory time scales with the core.
    double compute = 0.0;
    std::uint64_t flushes = 0;
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        const auto& spec = bed.specs[t];
        const auto& tr = *bed.traces[t];
        const double per_record = spec.host_compute_ns_per_record != 0
                                      ? static_cast<double>(spec.host_compute_ns_per_record)
                                      : static_cast<double>(spec.storage_compute_ns_per_record) / cfg.host.speedup;
        double memory = static_cast<double>(tr.records.size()) *
                        static_cast<double>(lat.dram_access_ns + kLinesPerPage * cfg.runtime.dram_line_ns);
        for (const auto& op : tr.ops) {
            memory += static_cast<double>(lat.dram_access_ns + op.lines * cfg.runtime.dram_line_ns);
            flushes += op.kind == workloads::HeapOpKind::Flush;
        }
        compute += per_record * kRecordsPerPage * static_cast<double>(tr.records.size()) +
                   memory / cfg.host.speedup;
    }
    if (scenario == Scenario::HostSgx) {
        compute *= cfg.host.sgx_multiplier;
    }
    const SimTime compute_end = load_end + static_cast<SimTime>(std::llround(compute));

    // Write-back of flushed heap pages: host link, then a flash program.
    SimTime flush_end = compute_end;
    if (flushes > 0) {
        bed.kernel.schedule(compute_end, sim::EventKind::Generic, 0, [&] {
            std::uint64_t k = 0;
            for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
                const auto& tr = *bed.traces[t];
                for (const auto& op : tr.ops) {
                    if (op.kind != workloads::HeapOpKind::Flush) {
                        continue;
                    }
                    const SimTime sent = link.acquire(bed.kernel.now(), page_xfer) + page_xfer;
                    const Lpa out = bed.outputs[t][k++ % kOutputPages];
                    bed.kernel.schedule(sent, sim::EventKind::HostLinkDone, t, [&, out, k] {
                        flash::PageData data;
                        if (bed.flash.faithful()) {
                            data.bytes.assign(4096, 0);
                        } else {
                            data.digest = sim::Rng::mix(out.value ^ k);
                        }
                        bed.ftl.write_lpa(out, std::move(data), kFtlTeeId,
                                          [&](SimTime at) { flush_end = std::max(flush_end, at); });
                    });
                }
            }
        });
        bed.kernel.run_until_idle();
    }

    RunReport r;
    fill_common(r, cfg, scenario, workload);
    r.makespan_ns = flush_end;
    r.compute_ns = compute;
    // Load and write-back; taken as the remainder so rounding never overshoots.
    r.data_load_ns = static_cast<double>(flush_end) - compute;
    r.cores = 1;
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        const Stream& s = streams[t];
        r.translations += s.translations;
        r.mapping_misses += s.misses;
        TeeReport tee;
        tee.tid = t + 1;
        tee.workload = workload;
        tee.translations = s.translations;
        tee.mapping_misses = s.misses;
        tee.records = s.arrived;
        tee.pages_loaded = s.arrived;
        tee.completion_ns = flush_end;
        const auto blob = s.reducer->finish();
        tee.result_digest = digest_of(blob);
        tee.check = check_result(cfg, bed.specs[t], bed.datasets[t], blob);
        r.tees.push_back(std::move(tee));
    }
    r.mapping_cache_hit_rate = 1.0 - r.mapping_miss_rate();
    r.events = bed.kernel.dispatched();
    r.trace_digest = bed.kernel.trace_digest();
    return r;
}

// ---- in-storage ----

RunReport run_in_storage(const RunConfig& cfg, Scenario scenario, const std::string& workload, std::ostream* trace) {
    Bed bed(cfg, workload);
    bed.kernel.set_trace(trace);
    const bool secure = scenario == Scenario::IceClave;

    std::unique_ptr<secmem::SecureMemory> mem;
    if (secure) {
        secmem::SecureMemoryConfig sc = cfg.secure_memory;
        sc.dram_access_ns = cfg.latency.dram_access_ns;
        sc.aes_pad_ns = cfg.latency.aes_pad_ns;
        sc.dram_line_ns = cfg.runtime.dram_line_ns;
        sc.functional = cfg.faithful;
        mem = std::make_unique<secmem::SecureMemory>(sc);
    }
    runtime::RuntimeConfig rc = cfg.runtime;
    rc.secure = secure;
    runtime::Runtime rt(bed.kernel, bed.ftl, mem.get(), rc);
    rt.set_trace(trace);

    std::vector<std::vector<std::uint8_t>> blobs(cfg.tenants);
    std::vector<SimTime> delivered(cfg.tenants, 0);
    std::vector<bool> got(cfg.tenants, false);
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        runtime::OffloadRequest req;
        req.tid = t + 1;
        req.program_bytes = cfg.program_bytes;
        req.bin = runtime::WorkloadBinding{&bed.specs[t], &bed.datasets[t], bed.traces[t]};
        req.lpa = bed.datasets[t].lpas();
        req.output_lpa = bed.outputs[t];
        rt.submit(std::move(req), [&, t](SimTime at, const std::vector<std::uint8_t>& blob) {
            blobs[t] = blob;
            delivered[t] = at;
            got[t] = true;
        });
    }
    bed.kernel.run_until_idle();

    RunReport r;
    fill_common(r, cfg, scenario, workload);
    SimTime first_start = ~SimTime{0};
    SimTime last_finish = 0;
    for (std::uint32_t t = 0; t < cfg.tenants; ++t) {
        const auto& d = rt.tee(t + 1);
        if (!got[t]) {
            throw Error("tee " + std::to_string(t + 1) + " ended " + runtime::to_string(d.state) +
                        (d.abort_cause ? std::string(" (") + runtime::to_string(*d.abort_cause) + ")" : std::string{}));
        }
        first_start = std::min(first_start, d.started_at);
        last_finish = std::max(last_finish, d.finished_at);
        r.makespan_ns = std::max(r.makespan_ns, delivered[t]);
        TeeReport tee;
        tee.tid = d.tid;
        tee.workload = workload;
        tee.world_switches = d.counters.world_switches;
        tee.lifecycle_switches = d.counters.lifecycle_switches;
        tee.translations = d.counters.translations;
        tee.mapping_misses = d.counters.mapping_misses;
        tee.secure_reads = d.counters.secure_reads;
        tee.secure_writes = d.counters.secure_writes;
        tee.pages_loaded = d.counters.pages_loaded;
        tee.flushes = d.counters.flushes;
        tee.records = d.counters.records_done;
        tee.completion_ns = delivered[t];
        tee.result_digest = digest_of(blobs[t]);
        tee.check = check_result(cfg, bed.specs[t], bed.datasets[t], blobs[t]);
        r.translations += tee.translations;
        r.mapping_misses += tee.mapping_misses;
        r.world_switches += tee.world_switches;
        r.lifecycle_switches += tee.lifecycle_switches;
        r.tees.push_back(std::move(tee));
    }

    const double cores = rc.storage_cores;
    r.cores = rc.storage_cores;
    const auto& st = rt.stats();
    r.compute_ns = static_cast<double>(st.compute_ns + st.memory_ns) / cores;
    if (mem) {
        const auto& ms = mem->stats();
        r.encryption_charge_ns = ms.encryption_charge_ns;
        r.verification_charge_ns = ms.verification_charge_ns;
        r.encryption_overhead_ns = static_cast<double>(ms.encryption_charge_ns) / cores;
        r.verification_overhead_ns = static_cast<double>(ms.verification_charge_ns) / cores;
        const auto& cc = mem->counter_cache();
        r.counter_cache_hit_rate = ratio(cc.hits(), cc.hits() + cc.misses());
        const auto traffic = mem->traffic_report();
        r.encryption_extra_pct = traffic.encryption_extra_pct;
        r.verification_extra_pct = traffic.verification_extra_pct;
        r.secure_accesses = ms.reads + ms.writes;
        r.mean_encryption_latency_ns = ratio(ms.access_encryption_latency_ns, r.secure_accesses);
        r.mean_verification_latency_ns = ratio(ms.access_verification_latency_ns, r.secure_accesses);
    }
    // Everything outside the busy window: offload, creation, deletion, result return.
    const SimTime window = last_finish > first_start ? last_finish - first_start : 0;
    r.lifecycle_ns = static_cast<double>(r.makespan_ns - window);
    const double rest = static_cast<double>(r.makespan_ns) - r.lifecycle_ns - r.compute_ns -
                        r.encryption_overhead_ns - r.verification_overhead_ns;
    r.data_load_ns = std::max(0.0, rest);
    r.mapping_cache_hit_rate = 1.0 - r.mapping_miss_rate();
    r.events = bed.kernel.dispatched();
    r.trace_digest = bed.kernel.trace_digest();
    return r;
}

} // namespace

ftl::FtlConfig effective_ftl(const RunConfig& config) {
    ftl::FtlConfig f = config.ftl;
    const std::uint64_t logical = f.logical_pages != 0 ? f.logical_pages : config.geometry.total_pages();
    const std::uint64_t wanted = f.cache_entries != 0
                                     ? f.cache_entries
                                     : static_cast<std::uint64_t>(std::ceil(f.cache_fraction * static_cast<double>(logical)));
    f.cache_entries = std::max<std::uint64_t>(
        f.entries_per_frame, std::min(wanted, config.runtime.regions.protected_bytes / 8));
    return f;
}

RunReport run_scenario(const RunConfig& config, Scenario scenario, const std::string& workload, std::ostream* trace) {
    config.validate();
    if (trace != nullptr) {
        *trace << "# scenario " << to_string(scenario) << " workload " << workload << " tenants " << config.tenants
               << " channels " << config.geometry.channels << " t_rd " << config.latency.t_rd_ns << " seed "
               << config.seed << '\n';
    }
    switch (scenario) {
    case Scenario::Host:
    case Scenario::HostSgx:
        return run_host(config, scenario, workload, trace);
    case Scenario::Isc:
    case Scenario::IceClave:
        return run_in_storage(config, scenario, workload, trace);
    }
    throw ConfigError("unknown scenario");
}

std::vector<RunReport> run_all(const RunConfig& config, std::ostream* trace) {
    std::vector<RunReport> out;
    for (Scenario s : config.scenarios) {
        for (const auto& w : config.workloads) {
            out.push_back(run_scenario(config, s, w, trace));
        }
    }
    return out;
}

RunConfig at_axis_point(RunConfig config, Axis axis, std::uint64_t value) {
    switch (axis) {
    case Axis::Channels:
        config.geometry.channels = static_cast<std::uint32_t>(value);
        break;
    case Axis::ReadLatency:
        config.latency.t_rd_ns = value;
        break;
    case Axis::Dram:
        // The protected region (and so the mapping cache) scales with DRAM.
        config.runtime.regions.protected_bytes =
            config.runtime.regions.protected_bytes * value / config.runtime.regions.dram_bytes;
        config.runtime.regions.dram_bytes = value;
        break;
    case Axis::Tenants:
        config.tenants = static_cast<std::uint32_t>(value);
        break;
    }
    return config;
}

std::vector<RunReport> run_sweep(const RunConfig& config, Axis axis) {
    auto values = config.sweep.values(axis);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<RunReport> out;
    for (auto v : values) {
        auto part = run_all(at_axis_point(config, axis, v));
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace ssdtee::bench
