#include "ssdtee/bench/checks.hpp"

#include "ssdtee/bench/report.hpp"
#include "ssdtee/bench/scenario.hpp"
#include "ssdtee/error.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace ssdtee::bench {

namespace {

bool near(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)}); }

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

template <class Fn>
CheckResult expect_throw(std::string name, Fn&& fn) {
    CheckResult r{std::move(name), false, "not detected"};
    try {
        fn();
    } catch (const Error& e) {
        r.passed = true;
        r.detail = e.what();
    }
    return r;
}

/// A small faithful device with secure memory and a runtime, for the
/// pipeline-level fault demos.
struct Rig {
    sim::Kernel kernel;
    flash::FlashStore flash;
    ftl::Ftl ftl;
    secmem::SecureMemory mem;
    runtime::Runtime rt;
    std::deque<workloads::Dataset> datasets;
    std::uint64_t next = 0;

    static secmem::SecureMemoryConfig mem_config() {
        secmem::SecureMemoryConfig c;
        c.functional = true;
        return c;
    }
    static runtime::RuntimeConfig rt_config() {
        runtime::RuntimeConfig c;
        c.secure = true;
        return c;
    }

    explicit Rig(std::uint64_t seed)
        : kernel(seed), flash(kernel, flash::FlashGeometry{}, flash::LatencyConfig{}, true), ftl(flash),
          mem(mem_config()), rt(kernel, ftl, &mem, rt_config()) {}

    const workloads::Dataset& dataset(std::uint32_t tid, std::uint64_t pages) {
        datasets.push_back(workloads::build_dataset(
            workloads::DatasetConfig{pages * workloads::Dataset::kPageBytes, next, tid}, ftl));
        next += pages + 16;
        return datasets.back();
    }

    runtime::OffloadRequest request(std::uint32_t tid, const char* workload, std::uint64_t pages) {
        return request(tid, workload, dataset(tid, pages));
    }

    runtime::OffloadRequest request(std::uint32_t tid, const char* workload, const workloads::Dataset& d) {
        const auto& spec = workloads::find(workload);
        const std::uint64_t pages = d.pages();
        runtime::OffloadRequest r;
        r.tid = tid;
        r.lpa = d.lpas();
        for (std::uint64_t i = 0; i < 16; ++i) {
            r.output_lpa.push_back(Lpa{d.first_lpa() + pages + i});
        }
        r.bin = runtime::WorkloadBinding{&spec, &d,
                                         std::make_shared<const workloads::AccessTrace>(
                                             workloads::generate_trace(spec, d, tid))};
        return r;
    }
};

CheckResult aborted_with(std::string name, const runtime::TeeDescriptor& d, runtime::AbortCause cause) {
    CheckResult r{std::move(name), false, {}};
    r.passed = d.state == runtime::TeeState::Aborted && d.abort_cause == cause && !d.result.has_value();
    r.detail = std::string("tee ended ") + runtime::to_string(d.state) +
               (d.abort_cause ? std::string(" (") + runtime::to_string(*d.abort_cause) + ")" : std::string{});
    return r;
}

} // namespace

std::vector<CheckResult> selftest(const RunConfig& config) {
    config.validate();
    std::vector<CheckResult> out;
    for (const auto& w : config.workloads) {
        const RunReport host = run_scenario(config, Scenario::Host, w);
        const RunReport sgx = run_scenario(config, Scenario::HostSgx, w);
        const RunReport isc = run_scenario(config, Scenario::Isc, w);
        const RunReport ice = run_scenario(config, Scenario::IceClave, w);
        const std::string p = w + ": ";

        out.push_back({p + "isc makespan <= iceclave makespan", isc.makespan_ns <= ice.makespan_ns,
                       std::to_string(isc.makespan_ns) + " vs " + std::to_string(ice.makespan_ns)});
        out.push_back({p + "host+sgx compute = host compute x multiplier",
                       near(sgx.compute_ns, host.compute_ns * config.host.sgx_multiplier),
                       fmt(sgx.compute_ns) + " vs " + fmt(host.compute_ns)});
        out.push_back({p + "overheads equal secure memory charges per core",
                       near(ice.encryption_overhead_ns * ice.cores, static_cast<double>(ice.encryption_charge_ns)) &&
                           near(ice.verification_overhead_ns * ice.cores,
                                static_cast<double>(ice.verification_charge_ns)),
                       fmt(ice.encryption_overhead_ns) + " + " + fmt(ice.verification_overhead_ns)});

        bool phases = true;
        bool rates = true;
        for (const RunReport* r : {&host, &sgx, &isc, &ice}) {
            phases = phases && r->phase_sum() <= static_cast<double>(r->makespan_ns) * (1 + 1e-12);
            rates = rates && in_unit(r->counter_cache_hit_rate) && in_unit(r->mapping_cache_hit_rate) &&
                    in_unit(r->mapping_miss_rate());
        }
        out.push_back({p + "phases sum to at most the makespan", phases, {}});
        out.push_back({p + "rates within [0, 1]", rates, {}});

        bool identity = ice.world_switches == 2 * ice.mapping_misses + ice.lifecycle_switches;
        for (const auto& t : ice.tees) {
            identity = identity && t.world_switches == 2 * t.mapping_misses + t.lifecycle_switches;
        }
        out.push_back({p + "world switches = 2 x misses + lifecycle", identity,
                       std::to_string(ice.world_switches) + " switches, " + std::to_string(ice.mapping_misses) +
                           " misses"});

        std::ostringstream t1;
        std::ostringstream t2;
        const RunReport a = run_scenario(config, Scenario::IceClave, w, &t1);
        const RunReport b = run_scenario(config, Scenario::IceClave, w, &t2);
        out.push_back({p + "same seed gives identical trace and csv",
                       t1.str() == t2.str() && csv_row(a) == csv_row(b) && a == ice, {}});

        RunConfig small = config;
        small.dataset_bytes = std::min<std::uint64_t>(config.dataset_bytes, 2ULL << 20);
        small.faithful = true;
        bool verified = true;
        std::string detail;
        for (Scenario s : all_scenarios()) {
            for (const auto& t : run_scenario(small, s, w).tees) {
                if (t.check != "pass") {
                    verified = false;
                    detail += std::string(to_string(s)) + " tee " + std::to_string(t.tid) + " " + t.check + "; ";
                }
            }
        }
        out.push_back({p + "faithful results verify under every scenario", verified, detail});
    }
    return out;
}

std::vector<CheckResult> tamper_demos(std::uint64_t seed) {
    using secmem::PageClass;
    using secmem::SecureMemory;
    using secmem::Tree;
    std::vector<CheckResult> out;

    auto toy = [] {
        secmem::SecureMemoryConfig c;
        c.ro_slots = 512;
        c.rw_slots = 64;
        c.functional = true;
        return c;
    };
    std::vector<std::uint8_t> page(secmem::kPageBytes);
    sim::Rng rng(seed);
    for (auto& b : page) {
        b = static_cast<std::uint8_t>(rng.next_u64());
    }
    const auto bit = static_cast<std::uint32_t>(rng.below(512));
    const auto line = static_cast<std::uint32_t>(rng.below(secmem::kLinesPerPage));
    const std::uint64_t at = std::uint64_t{line} * secmem::kLineBytes;

    {
        SecureMemory m(toy());
        m.register_page(0, PageClass::Writable);
        m.secure_write(0, secmem::kPageBytes, page);
        m.flip_data_bit(0, line, bit);
        out.push_back(expect_throw("data bit flip", [&] { m.secure_read(at, 64); }));
    }
    {
        SecureMemory m(toy());
        m.register_page(0, PageClass::Writable);
        m.secure_write(0, secmem::kPageBytes, page);
        m.flip_mac_bit(0, line, bit % 64);
        out.push_back(expect_throw("mac bit flip", [&] { m.secure_read(at, 64); }));
    }
    {
        SecureMemory m(toy());
        m.register_page(0, PageClass::Writable);
        m.secure_write(0, secmem::kPageBytes, page);
        m.flip_counter_bit(Tree::Writable, 0, bit);
        out.push_back(expect_throw("split counter bit flip", [&] { m.verify_root(Tree::Writable); }));
    }
    {
        SecureMemory m(toy());
        m.register_page(0, PageClass::ReadOnly);
        m.load_page(0, page);
        m.flip_counter_bit(Tree::ReadOnly, 0, bit);
        out.push_back(expect_throw("read-only counter bit flip", [&] { m.verify_root(Tree::ReadOnly); }));
    }
    {
        SecureMemory m(toy());
        m.register_page(0, PageClass::Writable);
        m.secure_write(0, secmem::kPageBytes, page);
        m.flip_node_bit(Tree::Writable, 1, 0, bit);
        out.push_back(expect_throw("tree node bit flip", [&] { m.verify_root(Tree::Writable); }));
    }
    {
        Rig rig(seed);
        // Larger than the staging ring, so the tampered slot is used again.
        rig.rt.offload_code(rig.request(1, "arithmetic", 2048), [&](std::uint32_t tid) {
            rig.rt.run_tee(tid);
            rig.kernel.schedule_after(200'000, sim::EventKind::Generic, tid,
                                      [&, tid] { rig.rt.corrupt_metadata(tid); });
        });
        rig.kernel.run_until_idle();
        out.push_back(aborted_with("runtime metadata corruption", rig.rt.tee(1), runtime::AbortCause::MetadataCorrupted));
    }
    {
        Rig rig(seed);
        rig.rt.offload_code(rig.request(1, "arithmetic", 8));
        rig.rt.offload_code(rig.request(2, "arithmetic", 8));
        rig.kernel.run_until_idle();
        const Lpa victim = rig.datasets[0].lpa(0);
        const TeeId intruder = rig.rt.tee(2).id;
        out.push_back(expect_throw("cross-tee translation", [&] { (void)rig.ftl.translate(victim, intruder); }));
        out.push_back(expect_throw("cross-tee write", [&] {
            flash::PageData data;
            data.bytes.assign(4096, 0);
            rig.ftl.write_lpa_untimed(victim, std::move(data), intruder);
        }));
        out.push_back(expect_throw("offload over another tee's pages",
                                   [&] { rig.rt.offload_code(rig.request(3, "arithmetic", rig.datasets[0])); }));
    }
    {
        Rig rig(seed);
        rig.rt.offload_code(rig.request(1, "tpch-q3", 512), [&](std::uint32_t tid) {
            rig.rt.run_tee(tid);
            rig.rt.inject_exception(tid, 300);
        });
        rig.kernel.run_until_idle();
        out.push_back(aborted_with("program exception", rig.rt.tee(1), runtime::AbortCause::ProgramException));
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& results) noexcept {
    for (const auto& r : results) {
        if (!r.passed) {
            return false;
        }
    }
    return true;
}

} // namespace ssdtee::bench
