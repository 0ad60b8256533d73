#pragma once

#include "ssdtee/flash/flash_store.hpp"
#include "ssdtee/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssdtee::ftl {
class Ftl;
}

namespace ssdtee::workloads {

enum class Category : std::uint8_t { Scan, Join, WriteHeavy };
enum class WritePattern : std::uint8_t { None, Append, Update };

inline constexpr std::uint32_t kRecordBytes = 64;
inline constexpr std::uint32_t kFieldsPerRecord = kRecordBytes / 4;

/// Cost and access-shape parameters of one workload. Compute costs are
/// fitted constants (per 64-byte record), not measurements.
struct WorkloadSpec {
    std::string name;
    Category category = Category::Scan;
    std::string description;
    Duration storage_compute_ns_per_record = 8;
    /// Zero derives the host cost from the host speed multiplier.
    Duration host_compute_ns_per_record = 0;
    /// Predicate pass rate for filters and the probe side of joins.
    double selectivity = 1.0;
    /// Share of input pages forming the build side of a join.
    double build_fraction = 0.0;
    /// One-line hash-table inserts per build-side page.
    std::uint32_t build_writes_per_page = 0;
    /// One-line hash-table probes per probe-side page.
    std::uint32_t probe_reads_per_page = 0;
    /// Heap-page write operations per input page and lines each one touches.
    double write_fraction = 0.0;
    std::uint32_t lines_per_write = 1;
    /// Zipf exponent for heap write targets (0 = uniform).
    double write_skew = 0.0;
    /// Heap pages flushed to flash per input page.
    double flush_fraction = 0.0;
    std::uint32_t output_bytes_per_record = 0;
    WritePattern write_pattern = WritePattern::None;

    /// Expected share of reads among reads and heap writes, counting the
    /// input page itself as one read.
    [[nodiscard]] double read_fraction() const noexcept;
    void validate() const;
};

/// The built-in suite, in a fixed order.
[[nodiscard]] const std::vector<WorkloadSpec>& registry();
/// Throws UnknownWorkload.
[[nodiscard]] const WorkloadSpec& find(std::string_view name);
/// Workloads whose input pages are never rewritten and which write little
/// heap state: every scan and join.
[[nodiscard]] bool read_intensive(const WorkloadSpec& spec) noexcept;

struct DatasetConfig {
    std::uint64_t total_bytes = 256ULL << 20;
    std::uint64_t first_lpa = 0;
    std::uint64_t seed = 1;
};

/// Synthetic input table occupying a contiguous LPA range. Page contents
/// are a pure function of (seed, page index): 64 records of 16 little-endian
/// 32-bit fields.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(const DatasetConfig& cfg);

    [[nodiscard]] std::uint64_t pages() const noexcept { return pages_; }
    [[nodiscard]] std::uint64_t total_bytes() const noexcept { return pages_ * kPageBytes; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] Lpa lpa(std::uint64_t index) const noexcept { return Lpa{first_lpa_ + index}; }
    [[nodiscard]] std::uint64_t first_lpa() const noexcept { return first_lpa_; }
    [[nodiscard]] std::vector<Lpa> lpas() const;

    void fill_page(std::uint64_t index, std::span<std::uint8_t> out) const;
    [[nodiscard]] std::vector<std::uint8_t> page(std::uint64_t index) const;
    /// Content tag stored with the page when payloads are not kept.
    [[nodiscard]] std::uint64_t tag(std::uint64_t index) const noexcept;

    static constexpr std::uint32_t kPageBytes = 4096;

private:
    std::uint64_t pages_ = 0;
    std::uint64_t first_lpa_ = 0;
    std::uint64_t seed_ = 0;
};

/// Writes every page through the FTL outside the measured phase. Faithful
/// flash stores receive full payloads. Throws DeviceFull.
Dataset build_dataset(const DatasetConfig& cfg, ftl::Ftl& ftl);

enum class HeapOpKind : std::uint8_t { Read, Write, Flush };

struct HeapOp {
    HeapOpKind kind = HeapOpKind::Read;
    std::uint32_t page = 0;  // heap page index
    std::uint16_t line = 0;  // first line
    std::uint16_t lines = 1; // lines touched
};

/// One input page: its read, compute, and the heap operations it triggers.
struct TraceRecord {
    std::uint64_t page = 0; // dataset page index
    Duration compute_ns = 0;
    std::uint32_t first_op = 0;
    std::uint32_t op_count = 0;
};

struct AccessTrace {
    std::string workload;
    std::vector<TraceRecord> records;
    std::vector<HeapOp> ops;
    std::uint32_t heap_pages = 0;

    [[nodiscard]] std::span<const HeapOp> ops_of(const TraceRecord& r) const {
        return std::span<const HeapOp>(ops).subspan(r.first_op, r.op_count);
    }
    /// Input-page reads plus heap reads.
    [[nodiscard]] std::uint64_t reads() const noexcept;
    /// Heap write operations (flushes are counted separately).
    [[nodiscard]] std::uint64_t writes() const noexcept;
    [[nodiscard]] std::uint64_t flushes() const noexcept;
    [[nodiscard]] double read_fraction() const noexcept;
    [[nodiscard]] Duration total_compute_ns() const noexcept;
    [[nodiscard]] std::uint64_t digest() const noexcept;
};

/// Scans visit pages in LPA (stripe) order; joins visit the build side
/// first. Heap targets are drawn from `seed`.
[[nodiscard]] AccessTrace generate_trace(const WorkloadSpec& spec, const Dataset& dataset, std::uint64_t seed,
                                         std::uint32_t heap_pages = 4096);

/// Order-independent streaming evaluator of a workload's answer.
class Reducer {
public:
    virtual ~Reducer() = default;
    virtual void consume(std::uint64_t page_index, std::span<const std::uint8_t> page) = 0;
    [[nodiscard]] virtual std::vector<std::uint8_t> finish() const = 0;
};

[[nodiscard]] std::unique_ptr<Reducer> make_reducer(const WorkloadSpec& spec, const Dataset& dataset);

/// Recomputes the answer directly from the dataset and compares.
[[nodiscard]] bool verify_result(const WorkloadSpec& spec, const Dataset& dataset, std::span<const std::uint8_t> result);

/// Direct evaluation over the dataset (the oracle behind verify_result).
[[nodiscard]] std::vector<std::uint8_t> evaluate(const WorkloadSpec& spec, const Dataset& dataset);

} // namespace ssdtee::workloads
