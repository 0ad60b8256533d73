#pragma once

#include "ssdtee/bench/scenario.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ssdtee::bench {

/// CSV schema, one row per RunReport, columns in this order:
///
///   scenario, workload, tenants, channels, t_rd_ns, dram_bytes, dataset_bytes,
///   seed, makespan_ns, data_load_ns, compute_ns, encryption_overhead_ns,
///   verification_overhead_ns, lifecycle_ns, encryption_charge_ns,
///   verification_charge_ns, cores, counter_cache_hit_rate,
///   mapping_cache_hit_rate, translations, mapping_misses, world_switches,
///   lifecycle_switches, encryption_extra_pct, verification_extra_pct,
///   secure_accesses, mean_encryption_latency_ns,
///   mean_verification_latency_ns, events, trace_digest, tees
///
/// Reals use the shortest text that reads back to the same double. `tees`
/// holds one entry per TEE separated by ';', each entry being
///   tid:workload:world_switches:lifecycle_switches:translations:
///   mapping_misses:secure_reads:secure_writes:pages_loaded:flushes:records:
///   completion_ns:result_digest:check
[[nodiscard]] const std::vector<std::string>& csv_columns();
[[nodiscard]] std::string csv_header();
[[nodiscard]] std::string csv_row(const RunReport& report);

void write_csv(std::ostream& out, const std::vector<RunReport>& reports);
/// Throws IoError.
void write_csv(const std::filesystem::path& path, const std::vector<RunReport>& reports);

/// Inverse of write_csv. Throws ConfigError on a malformed document.
[[nodiscard]] std::vector<RunReport> parse_csv(std::string_view text);

} // namespace ssdtee::bench
