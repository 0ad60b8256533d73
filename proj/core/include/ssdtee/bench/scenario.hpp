#pragma once

#include "ssdtee/bench/config.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ssdtee::bench {

struct TeeReport {
    std::uint32_t tid = 0;
    std::string workload;
    std::uint64_t world_switches = 0;
    std::uint64_t lifecycle_switches = 0;
    std::uint64_t translations = 0;
    std::uint64_t mapping_misses = 0;
    std::uint64_t secure_reads = 0;
    std::uint64_t secure_writes = 0;
    std::uint64_t pages_loaded = 0;
    std::uint64_t flushes = 0;
    std::uint64_t records = 0;
    /// When the result reached the host.
    SimTime completion_ns = 0;
    std::uint64_t result_digest = 0;
    /// "pass" or "fail" against the direct evaluation; "skipped" unless faithful.
    std::string check = "skipped";

    friend bool operator==(const TeeReport&, const TeeReport&) = default;
};

/// One scenario run. Phase times are wall-clock attributions: core-side
/// work (compute, encryption, verification) is divided by the number of
/// cores that share it, and data_load is what remains of the makespan after
/// lifecycle, compute and security phases.
struct RunReport {
    std::string scenario;
    std::string workload;
    std::uint32_t tenants = 1;
    std::uint32_t channels = 0;
    Duration t_rd_ns = 0;
    std::uint64_t dram_bytes = 0;
    std::uint64_t dataset_bytes = 0;
    std::uint64_t seed = 0;

    SimTime makespan_ns = 0;
    double data_load_ns = 0;
    double compute_ns = 0;
    double encryption_overhead_ns = 0;
    double verification_overhead_ns = 0;
    double lifecycle_ns = 0;
    /// Raw secure-memory charges summed over every core access.
    Duration encryption_charge_ns = 0;
    Duration verification_charge_ns = 0;
    std::uint32_t cores = 1;

    double counter_cache_hit_rate = 0;
    double mapping_cache_hit_rate = 0;
    std::uint64_t translations = 0;
    std::uint64_t mapping_misses = 0;
    std::uint64_t world_switches = 0;
    std::uint64_t lifecycle_switches = 0;
    double encryption_extra_pct = 0;
    double verification_extra_pct = 0;
    std::uint64_t secure_accesses = 0;
    double mean_encryption_latency_ns = 0;
    double mean_verification_latency_ns = 0;
    std::uint64_t events = 0;
    std::uint64_t trace_digest = 0;

    std::vector<TeeReport> tees;

    [[nodiscard]] double mapping_miss_rate() const noexcept {
        return translations == 0 ? 0.0 : static_cast<double>(mapping_misses) / static_cast<double>(translations);
    }
    [[nodiscard]] double phase_sum() const noexcept {
        return data_load_ns + compute_ns + encryption_overhead_ns + verification_overhead_ns + lifecycle_ns;
    }

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Runs `tenants` copies of `workload` under `scenario`, each on its own
/// dataset. With `trace`, writes the kernel event log and TEE lifecycle
/// lines. Throws ConfigError, or Error when a TEE aborts.
[[nodiscard]] RunReport run_scenario(const RunConfig& config, Scenario scenario, const std::string& workload,
                                     std::ostream* trace = nullptr);

/// Every configured scenario x workload, in config order.
[[nodiscard]] std::vector<RunReport> run_all(const RunConfig& config, std::ostream* trace = nullptr);

/// The config with one axis point applied.
[[nodiscard]] RunConfig at_axis_point(RunConfig config, Axis axis, std::uint64_t value);

/// One run_all per axis value, ascending.
[[nodiscard]] std::vector<RunReport> run_sweep(const RunConfig& config, Axis axis);

/// Effective FTL settings: the mapping cache never exceeds the protected
/// region (8 bytes per entry).
[[nodiscard]] ftl::FtlConfig effective_ftl(const RunConfig& config);

} // namespace ssdtee::bench
