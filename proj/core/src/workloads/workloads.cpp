#include "ssdtee/workloads/workloads.hpp"

#include "ssdtee/error.hpp"
#include "ssdtee/ftl/ftl.hpp"
#include "ssdtee/sim/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace ssdtee::workloads {

namespace {

using sim::Rng;

constexpr std::uint32_t kKeySpace = 4096;
constexpr std::uint32_t kRecordsPerPage = Dataset::kPageBytes / kRecordBytes;

WorkloadSpec scan(std::string name, std::string desc, Duration ns, double selectivity = 1.0) {
    WorkloadSpec s;
    s.name = std::move(name);
    s.description = std::move(desc);
    s.category = Category::Scan;
    s.storage_compute_ns_per_record = ns;
    s.selectivity = selectivity;
    return s;
}

WorkloadSpec join(std::string name, std::string desc, Duration ns, double build_fraction, std::uint32_t build_writes,
                  std::uint32_t probe_reads, double selectivity) {
    WorkloadSpec s;
    s.name = std::move(name);
    s.description = std::move(desc);
    s.category = Category::Join;
    s.storage_compute_ns_per_record = ns;
    s.build_fraction = build_fraction;
    s.build_writes_per_page = build_writes;
    s.probe_reads_per_page = probe_reads;
    s.selectivity = selectivity;
    s.output_bytes_per_record = 8;
    return s;
}

WorkloadSpec heavy(std::string name, std::string desc, Duration ns, double write_fraction, std::uint32_t lines,
                   double skew, double flush, WritePattern pattern) {
    WorkloadSpec s;
    s.name = std::move(name);
    s.description = std::move(desc);
    s.category = Category::WriteHeavy;
    s.storage_compute_ns_per_record = ns;
    s.write_fraction = write_fraction;
    s.lines_per_write = lines;
    s.write_skew = skew;
    s.flush_fraction = flush;
    s.write_pattern = pattern;
    s.output_bytes_per_record = 16;
    return s;
}

std::vector<WorkloadSpec> build_registry() {
    std::vector<WorkloadSpec> r;
    r.push_back(scan("arithmetic", "arithmetic over every record", 8));
    r.push_back(scan("aggregation", "average of one column", 7));
    r.push_back(scan("filter", "select records matching a feature", 9, 0.1));
    r.push_back(scan("tpch-q1", "grouped pricing summary", 10));
    r.push_back(join("tpch-q3", "shipping priority join", 50, 0.20, 16, 4, 0.30));
    r.push_back(join("tpch-q12", "shipping modes join", 45, 0.25, 16, 3, 0.40));
    r.push_back(join("tpch-q14", "promotion effect join", 40, 0.15, 16, 4, 0.50));
    r.push_back(join("tpch-q19", "discounted revenue join", 65, 0.20, 16, 5, 0.20));
    r.push_back(heavy("tpcb", "account balance updates", 20, 8.0, 1, 0.0, 0.05, WritePattern::Update));
    r.push_back(heavy("tpcc", "new-order stock updates", 25, 8.0, 2, 0.3, 0.10, WritePattern::Update));
    r.push_back(heavy("wordcount", "count the words of a text", 30, 10.0, 1, 0.0, 0.02, WritePattern::Append));
    for (const auto& s : r) {
        s.validate();
    }
    return r;
}

std::uint32_t field(std::span<const std::uint8_t> page, std::uint32_t record, std::uint32_t f) {
    std::uint32_t v = 0;
    std::memcpy(&v, page.data() + std::size_t{record} * kRecordBytes + f * 4, 4);
    return v;
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::vector<std::uint8_t> pack(std::span<const std::uint64_t> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 8);
    for (auto v : values) {
        append_u64(out, v);
    }
    return out;
}

std::uint32_t pct_threshold(double fraction) {
    return static_cast<std::uint32_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * 1000.0));
}

// ---- reducers ----

class ArithmeticReducer final : public Reducer {
public:
    void consume(std::uint64_t, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            sum_ += std::uint64_t{field(page, r, 0)} * field(page, r, 1) + field(page, r, 2);
        }
    }
    std::vector<std::uint8_t> finish() const override {
        const std::array<std::uint64_t, 1> v{sum_};
        return pack(v);
    }

private:
    std::uint64_t sum_ = 0;
};

class AggregationReducer final : public Reducer {
public:
    void consume(std::uint64_t, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            sum_ += field(page, r, 3);
            ++count_;
        }
    }
    std::vector<std::uint8_t> finish() const override {
        const std::array<std::uint64_t, 3> v{sum_, count_, count_ ? sum_ / count_ : 0};
        return pack(v);
    }

private:
    std::uint64_t sum_ = 0;
    std::uint64_t count_ = 0;
};

class FilterReducer final : public Reducer {
public:
    explicit FilterReducer(double selectivity) : threshold_(pct_threshold(selectivity)) {}
    void consume(std::uint64_t, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            if (field(page, r, 4) % 1000 < threshold_) {
                ++count_;
                digest_ += Rng::mix(field(page, r, 0));
            }
        }
    }
    std::vector<std::uint8_t> finish() const override {
        const std::array<std::uint64_t, 2> v{count_, digest_};
        return pack(v);
    }

private:
    std::uint32_t threshold_;
    std::uint64_t count_ = 0;
    std::uint64_t digest_ = 0;
};

class GroupReducer final : public Reducer {
public:
    void consume(std::uint64_t, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            const std::uint32_t g = field(page, r, 5) % 4;
            acc_[g * 3] += 1;
            acc_[g * 3 + 1] += field(page, r, 6) % 50 + 1;
            acc_[g * 3 + 2] += field(page, r, 7) % 100000;
        }
    }
    std::vector<std::uint8_t> finish() const override { return pack(acc_); }

private:
    std::array<std::uint64_t, 12> acc_{};
};

/// Build side marks keys that pass its predicate; probe side accumulates
/// per-key counts and revenue, combined at the end.
class JoinReducer final : public Reducer {
public:
    JoinReducer(std::uint64_t build_pages, std::uint32_t probe_field, double selectivity)
        : build_pages_(build_pages), probe_field_(probe_field), threshold_(pct_threshold(selectivity)),
          marked_(kKeySpace, 0), count_(kKeySpace, 0), revenue_(kKeySpace, 0) {}
    void consume(std::uint64_t index, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            if (index < build_pages_) {
                if (field(page, r, 9) % 4 == 0) {
                    marked_[field(page, r, 0) % kKeySpace] = 1;
                }
            } else if (field(page, r, probe_field_) % 1000 < threshold_) {
                const std::uint32_t k = field(page, r, 1) % kKeySpace;
                ++count_[k];
                revenue_[k] += field(page, r, 7) % 100000;
            }
        }
    }
    std::vector<std::uint8_t> finish() const override {
        std::uint64_t matches = 0;
        std::uint64_t revenue = 0;
        for (std::uint32_t k = 0; k < kKeySpace; ++k) {
            if (marked_[k]) {
                matches += count_[k];
                revenue += revenue_[k];
            }
        }
        const std::array<std::uint64_t, 2> v{matches, revenue};
        return pack(v);
    }

private:
    std::uint64_t build_pages_;
    std::uint32_t probe_field_;
    std::uint32_t threshold_;
    std::vector<std::uint8_t> marked_;
    std::vector<std::uint64_t> count_;
    std::vector<std::uint64_t> revenue_;
};

/// Keyed additive updates (balances, stock levels, word counts): the final
/// table is independent of application order.
class TableReducer final : public Reducer {
public:
    enum class Mode { Balance, Stock, Words };
    explicit TableReducer(Mode mode) : mode_(mode), table_(kKeySpace, 0) {}
    void consume(std::uint64_t, std::span<const std::uint8_t> page) override {
        for (std::uint32_t r = 0; r < kRecordsPerPage; ++r) {
            switch (mode_) {
            case Mode::Balance: {
                const auto delta = static_cast<std::int64_t>(field(page, r, 1) % 2001) - 1000;
                table_[field(page, r, 0) % kKeySpace] += static_cast<std::uint64_t>(delta);
                total_ += static_cast<std::uint64_t>(delta);
                ++events_;
                break;
            }
            case Mode::Stock: {
                const std::uint64_t qty = field(page, r, 1) % 10 + 1;
                table_[field(page, r, 0) % kKeySpace] -= qty;
                total_ += qty;
                ++events_;
                break;
            }
            case Mode::Words:
                for (std::uint32_t f = 0; f < kFieldsPerRecord; ++f) {
                    ++table_[field(page, r, f) % kKeySpace];
                    ++events_;
                }
                break;
            }
        }
    }
    std::vector<std::uint8_t> finish() const override {
        std::uint64_t h = 0;
        for (std::uint32_t k = 0; k < kKeySpace; ++k) {
            h = Rng::mix(h ^ table_[k] ^ (std::uint64_t{k} << 48));
        }
        const std::array<std::uint64_t, 3> v{events_, total_, h};
        return pack(v);
    }

private:
    Mode mode_;
    std::vector<std::uint64_t> table_;
    std::uint64_t events_ = 0;
    std::uint64_t total_ = 0;
};

std::uint64_t build_pages(const WorkloadSpec& spec, const Dataset& d) {
    return static_cast<std::uint64_t>(std::ceil(spec.build_fraction * static_cast<double>(d.pages())));
}

std::uint32_t probe_field_of(const WorkloadSpec& spec) {
    // Each query filters its probe side on a different column.
    std::uint32_t h = 0;
    for (char c : spec.name) {
        h = h * 31 + static_cast<std::uint8_t>(c);
    }
    return 10 + h % 6;
}

/// Inverse-CDF Zipf sampler over [0, n).
class Zipf {
public:
    Zipf(std::uint64_t n, double s) : cdf_(n) {
        double acc = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
            cdf_[i] = acc;
        }
        for (auto& c : cdf_) {
            c /= acc;
        }
    }
    std::uint64_t draw(Rng& rng) const {
        const double u = rng.unit();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

// Number of events in step i when `rate` events happen per step on average.
std::uint32_t spread(double rate, std::uint64_t i) {
    const auto a = static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(i)));
    const auto b = static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(i + 1)));
    return static_cast<std::uint32_t>(b - a);
}

} // namespace

void WorkloadSpec::validate() const {
    if (name.empty()) {
        throw ConfigError("workload needs a name");
    }
    if (storage_compute_ns_per_record == 0) {
        throw ConfigError("workload " + name + ": compute cost must be positive");
    }
    if (selectivity < 0.0 || selectivity > 1.0 || build_fraction < 0.0 || build_fraction > 1.0) {
        throw ConfigError("workload " + name + ": fractions must lie in [0, 1]");
    }
    if (write_fraction < 0.0 || flush_fraction < 0.0 || write_skew < 0.0) {
        throw ConfigError("workload " + name + ": negative rate");
    }
    if (lines_per_write == 0 || lines_per_write > 64) {
        throw ConfigError("workload " + name + ": lines_per_write must be 1..64");
    }
}

double WorkloadSpec::read_fraction() const noexcept {
    double reads = 1.0;
    double writes = 0.0;
    switch (category) {
    case Category::Scan:
        break;
    case Category::Join:
        reads += (1.0 - build_fraction) * probe_reads_per_page;
        writes = build_fraction * build_writes_per_page;
        break;
    case Category::WriteHeavy:
        writes = write_fraction;
        break;
    }
    return reads / (reads + writes);
}

const std::vector<WorkloadSpec>& registry() {
    static const std::vector<WorkloadSpec> r = build_registry();
    return r;
}

const WorkloadSpec& find(std::string_view name) {
    for (const auto& s : registry()) {
        if (s.name == name) {
            return s;
        }
    }
    throw UnknownWorkload("unknown workload '" + std::string(name) + "'");
}

bool read_intensive(const WorkloadSpec& spec) noexcept { return spec.category != Category::WriteHeavy; }

// ---- dataset ----

Dataset::Dataset(const DatasetConfig& cfg)
    : pages_(ceil_div(cfg.total_bytes, kPageBytes)), first_lpa_(cfg.first_lpa), seed_(cfg.seed) {}

std::vector<Lpa> Dataset::lpas() const {
    std::vector<Lpa> v(pages_);
    for (std::uint64_t i = 0; i < pages_; ++i) {
        v[i] = lpa(i);
    }
    return v;
}

void Dataset::fill_page(std::uint64_t index, std::span<std::uint8_t> out) const {
    const std::uint64_t base = Rng::mix(seed_ ^ Rng::mix(index + 0x51ed));
    for (std::uint32_t w = 0; w < kPageBytes / 8 && (w + 1) * 8 <= out.size(); ++w) {
        const std::uint64_t v = Rng::mix(base + w);
        std::memcpy(out.data() + std::size_t{w} * 8, &v, 8);
    }
}

std::vector<std::uint8_t> Dataset::page(std::uint64_t index) const {
    std::vector<std::uint8_t> p(kPageBytes);
    fill_page(index, p);
    return p;
}

std::uint64_t Dataset::tag(std::uint64_t index) const noexcept {
    return Rng::mix(seed_ ^ Rng::mix(index + 0x7a9));
}

Dataset build_dataset(const DatasetConfig& cfg, ftl::Ftl& ftl) {
    Dataset d(cfg);
    if (cfg.first_lpa + d.pages() > ftl.logical_pages()) {
        throw DeviceFull("dataset of " + std::to_string(d.pages()) + " pages does not fit the logical space");
    }
    const bool faithful = ftl.flash().faithful();
    for (std::uint64_t i = 0; i < d.pages(); ++i) {
        flash::PageData data;
        if (faithful) {
            data.bytes = d.page(i);
        } else {
            data.digest = d.tag(i);
        }
        ftl.write_lpa_untimed(d.lpa(i), std::move(data), kFtlTeeId);
    }
    return d;
}

// ---- traces ----

std::uint64_t AccessTrace::reads() const noexcept {
    std::uint64_t n = records.size();
    for (const auto& op : ops) {
        n += op.kind == HeapOpKind::Read;
    }
    return n;
}

std::uint64_t AccessTrace::writes() const noexcept {
    std::uint64_t n = 0;
    for (const auto& op : ops) {
        n += op.kind == HeapOpKind::Write;
    }
    return n;
}

std::uint64_t AccessTrace::flushes() const noexcept {
    std::uint64_t n = 0;
    for (const auto& op : ops) {
        n += op.kind == HeapOpKind::Flush;
    }
    return n;
}

double AccessTrace::read_fraction() const noexcept {
    const double r = static_cast<double>(reads());
    const double w = static_cast<double>(writes());
    return r + w == 0.0 ? 1.0 : r / (r + w);
}

Duration AccessTrace::total_compute_ns() const noexcept {
    Duration t = 0;
    for (const auto& r : records) {
        t += r.compute_ns;
    }
    return t;
}

std::uint64_t AccessTrace::digest() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v) { h = Rng::mix(h ^ v); };
    for (const auto& r : records) {
        feed(r.page);
        feed(r.compute_ns);
        feed(std::uint64_t{r.first_op} << 32 | r.op_count);
    }
    for (const auto& op : ops) {
        feed(std::uint64_t{static_cast<std::uint8_t>(op.kind)} << 56 | std::uint64_t{op.page} << 24 |
             std::uint64_t{op.line} << 8 | op.lines);
    }
    return h;
}

AccessTrace generate_trace(const WorkloadSpec& spec, const Dataset& dataset, std::uint64_t seed,
                           std::uint32_t heap_pages) {
    spec.validate();
    if (heap_pages == 0) {
        throw ConfigError("trace needs at least one heap page");
    }
    AccessTrace t;
    t.workload = spec.name;
    t.heap_pages = heap_pages;
    t.records.reserve(dataset.pages());
    Rng rng(Rng::mix(seed ^ Rng::mix(dataset.seed())));
    const Duration per_page = spec.storage_compute_ns_per_record * (Dataset::kPageBytes / kRecordBytes);
    const std::uint64_t heap_lines = std::uint64_t{heap_pages} * (Dataset::kPageBytes / 64);
    std::unique_ptr<Zipf> zipf;
    if (spec.write_skew > 0.0 && spec.write_fraction > 0.0) {
        zipf = std::make_unique<Zipf>(heap_pages, spec.write_skew);
    }
    const std::uint64_t build = build_pages(spec, dataset);
    std::uint64_t flushes_done = 0;

    auto line_op = [&](HeapOpKind kind) {
        const std::uint64_t line = rng.below(heap_lines);
        t.ops.push_back(HeapOp{kind, static_cast<std::uint32_t>(line / 64), static_cast<std::uint16_t>(line % 64), 1});
    };

    for (std::uint64_t i = 0; i < dataset.pages(); ++i) {
        TraceRecord rec;
        rec.page = i;
        rec.compute_ns = per_page;
        rec.first_op = static_cast<std::uint32_t>(t.ops.size());
        switch (spec.category) {
        case Category::Scan:
            break;
        case Category::Join:
            if (i < build) {
                for (std::uint32_t k = 0; k < spec.build_writes_per_page; ++k) {
                    line_op(HeapOpKind::Write);
                }
            } else {
                for (std::uint32_t k = 0; k < spec.probe_reads_per_page; ++k) {
                    line_op(HeapOpKind::Read);
                }
            }
            break;
        case Category::WriteHeavy:
            for (std::uint32_t k = spread(spec.write_fraction, i); k > 0; --k) {
                const auto page = static_cast<std::uint32_t>(zipf ? zipf->draw(rng) : rng.below(heap_pages));
                const auto span = spec.lines_per_write;
                const auto line = static_cast<std::uint16_t>(rng.below(64 - span + 1));
                t.ops.push_back(HeapOp{HeapOpKind::Write, page, line, static_cast<std::uint16_t>(span)});
            }
            for (std::uint32_t k = spread(spec.flush_fraction, i); k > 0; --k) {
                const auto page = static_cast<std::uint32_t>(flushes_done++ % heap_pages);
                t.ops.push_back(HeapOp{HeapOpKind::Flush, page, 0, 64});
            }
            break;
        }
        rec.op_count = static_cast<std::uint32_t>(t.ops.size()) - rec.first_op;
        t.records.push_back(rec);
    }
    return t;
}

// ---- results ----

std::unique_ptr<Reducer> make_reducer(const WorkloadSpec& spec, const Dataset& dataset) {
    if (spec.name == "arithmetic") {
        return std::make_unique<ArithmeticReducer>();
    }
    if (spec.name == "aggregation") {
        return std::make_unique<AggregationReducer>();
    }
    if (spec.name == "tpch-q1") {
        return std::make_unique<GroupReducer>();
    }
    if (spec.name == "tpcb") {
        return std::make_unique<TableReducer>(TableReducer::Mode::Balance);
    }
    if (spec.name == "tpcc") {
        return std::make_unique<TableReducer>(TableReducer::Mode::Stock);
    }
    if (spec.name == "wordcount") {
        return std::make_unique<TableReducer>(TableReducer::Mode::Words);
    }
    switch (spec.category) {
    case Category::Scan:
        return std::make_unique<FilterReducer>(spec.selectivity);
    case Category::Join:
        return std::make_unique<JoinReducer>(build_pages(spec, dataset), probe_field_of(spec), spec.selectivity);
    case Category::WriteHeavy:
        return std::make_unique<TableReducer>(TableReducer::Mode::Balance);
    }
    throw UnknownWorkload(spec.name);
}

std::vector<std::uint8_t> evaluate(const WorkloadSpec& spec, const Dataset& dataset) {
    auto r = make_reducer(spec, dataset);
    std::vector<std::uint8_t> page(Dataset::kPageBytes);
    for (std::uint64_t i = 0; i < dataset.pages(); ++i) {
        dataset.fill_page(i, page);
        r->consume(i, page);
    }
    return r->finish();
}

bool verify_result(const WorkloadSpec& spec, const Dataset& dataset, std::span<const std::uint8_t> result) {
    const auto expected = evaluate(spec, dataset);
    return expected.size() == result.size() && std::equal(expected.begin(), expected.end(), result.begin());
}

} // namespace ssdtee::workloads
