#pragma once

#include "ssdtee/flash/geometry.hpp"
#include "ssdtee/ftl/ftl.hpp"
#include "ssdtee/runtime/runtime.hpp"
#include "ssdtee/secmem/secure_memory.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ssdtee::bench {

enum class Scenario : std::uint8_t { Host, HostSgx, Isc, IceClave };

[[nodiscard]] const char* to_string(Scenario s) noexcept;
/// Accepts host, host-sgx, isc, iceclave. Throws ConfigError.
[[nodiscard]] Scenario parse_scenario(std::string_view name);
[[nodiscard]] const std::vector<Scenario>& all_scenarios();

enum class Axis : std::uint8_t { Channels, ReadLatency, Dram, Tenants };

[[nodiscard]] const char* to_string(Axis a) noexcept;
/// Accepts channels, t_rd, dram, tenants. Throws UnknownAxis.
[[nodiscard]] Axis parse_axis(std::string_view name);

struct HostConfig {
    /// Host core speed over one storage core.
    double speedup = 3.0;
    /// Compute slowdown inside an SGX enclave.
    double sgx_multiplier = 2.03;
    /// Outstanding reads the host I/O stack keeps per tenant.
    std::uint32_t queue_depth = 32;
};

/// Fitted per-record costs; zero keeps the built-in value.
struct Calibration {
    Duration storage_compute_ns_per_record = 0;
    Duration host_compute_ns_per_record = 0;
};

struct SweepConfig {
    std::vector<std::uint64_t> channels{4, 8, 16, 32};
    std::vector<std::uint64_t> t_rd_ns{10'000, 30'000, 50'000, 70'000, 90'000, 110'000};
    std::vector<std::uint64_t> dram_bytes{2ULL << 30, 4ULL << 30};
    std::vector<std::uint64_t> tenants{1, 2, 4};

    [[nodiscard]] const std::vector<std::uint64_t>& values(Axis a) const;
};

struct RunConfig {
    flash::FlashGeometry geometry;
    flash::LatencyConfig latency;
    ftl::FtlConfig ftl;
    /// Only cache shape, MAC time, slot pools and pad overlap are read from
    /// here; DRAM and AES timings come from `latency`, line time from `runtime`.
    secmem::SecureMemoryConfig secure_memory;
    runtime::RuntimeConfig runtime;
    HostConfig host;
    std::map<std::string, Calibration> calibration;

    std::vector<Scenario> scenarios = all_scenarios();
    std::vector<std::string> workloads{"arithmetic"};
    std::uint64_t dataset_bytes = 256ULL << 20;
    std::uint64_t program_bytes = 64 * 1024;
    std::uint32_t tenants = 1;
    std::uint64_t seed = 1;
    /// Carry real page payloads end to end and check every result.
    bool faithful = false;

    SweepConfig sweep;

    /// Throws ConfigError (or UnknownWorkload for an unregistered name).
    void validate() const;
};

/// Strict JSON reader: every key is optional, unknown keys are errors.
[[nodiscard]] RunConfig parse_config(std::string_view text);
/// Throws IoError when the file cannot be read.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
/// Every field, pretty-printed; parse_config(dump_config(c)) == c.
[[nodiscard]] std::string dump_config(const RunConfig& config);

/// Registered workload with the config's calibration applied.
[[nodiscard]] workloads::WorkloadSpec resolve_workload(const RunConfig& config, const std::string& name);

} // namespace ssdtee::bench
