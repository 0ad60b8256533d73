#include "ssdtee/bench/report.hpp"

#include "ssdtee/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>
#include <type_traits>

namespace ssdtee::bench {

namespace {

template <typename T>
std::string num(T v) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

template <typename T>
T parse_num(std::string_view s, std::string_view what) {
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw ConfigError("csv: bad value '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto at = s.find(sep, start);
        out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos) {
            return out;
        }
        start = at + 1;
    }
}

void check_plain(std::string_view s) {
    if (s.find_first_of(",;:\n\r\"") != std::string_view::npos) {
        throw ConfigError("csv: text field '" + std::string(s) + "' contains a separator");
    }
}

struct Column {
    std::string name;
    std::function<std::string(const RunReport&)> get;
    std::function<void(RunReport&, std::string_view)> set;
};

template <typename M>
Column col(std::string name, M RunReport::*member) {
    return Column{
        name,
        [member](const RunReport& r) {
            if constexpr (std::is_same_v<M, std::string>) {
                check_plain(r.*member);
                return r.*member;
            } else {
                return num(r.*member);
            }
        },
        [member, name](RunReport& r, std::string_view s) {
            if constexpr (std::is_same_v<M, std::string>) {
                r.*member = std::string(s);
            } else {
                r.*member = parse_num<M>(s, name);
            }
        }};
}

std::string encode_tee(const TeeReport& t) {
    check_plain(t.workload);
    check_plain(t.check);
    std::string s = num(t.tid);
    for (const std::string& f :
         {t.workload, num(t.world_switches), num(t.lifecycle_switches), num(t.translations), num(t.mapping_misses),
          num(t.secure_reads), num(t.secure_writes), num(t.pages_loaded), num(t.flushes), num(t.records),
          num(t.completion_ns), num(t.result_digest), t.check}) {
        s += ':';
        s += f;
    }
    return s;
}

TeeReport decode_tee(std::string_view s) {
    const auto f = split(s, ':');
    if (f.size() != 14) {
        throw ConfigError("csv: tee entry '" + std::string(s) + "' has " + std::to_string(f.size()) + " fields");
    }
    TeeReport t;
    t.tid = parse_num<std::uint32_t>(f[0], "tee.tid");
    t.workload = std::string(f[1]);
    t.world_switches = parse_num<std::uint64_t>(f[2], "tee.world_switches");
    t.lifecycle_switches = parse_num<std::uint64_t>(f[3], "tee.lifecycle_switches");
    t.translations = parse_num<std::uint64_t>(f[4], "tee.translations");
    t.mapping_misses = parse_num<std::uint64_t>(f[5], "tee.mapping_misses");
    t.secure_reads = parse_num<std::uint64_t>(f[6], "tee.secure_reads");
    t.secure_writes = parse_num<std::uint64_t>(f[7], "tee.secure_writes");
    t.pages_loaded = parse_num<std::uint64_t>(f[8], "tee.pages_loaded");
    t.flushes = parse_num<std::uint64_t>(f[9], "tee.flushes");
    t.records = parse_num<std::uint64_t>(f[10], "tee.records");
    t.completion_ns = parse_num<SimTime>(f[11], "tee.completion_ns");
    t.result_digest = parse_num<std::uint64_t>(f[12], "tee.result_digest");
    t.check = std::string(f[13]);
    return t;
}

const std::vector<Column>& columns() {
    static const std::vector<Column> c = [] {
        std::vector<Column> v{
            col("scenario", &RunReport::scenario),
            col("workload", &RunReport::workload),
            col("tenants", &RunReport::tenants),
            col("channels", &RunReport::channels),
            col("t_rd_ns", &RunReport::t_rd_ns),
            col("dram_bytes", &RunReport::dram_bytes),
            col("dataset_bytes", &RunReport::dataset_bytes),
            col("seed", &RunReport::seed),
            col("makespan_ns", &RunReport::makespan_ns),
            col("data_load_ns", &RunReport::data_load_ns),
            col("compute_ns", &RunReport::compute_ns),
            col("encryption_overhead_ns", &RunReport::encryption_overhead_ns),
            col("verification_overhead_ns", &RunReport::verification_overhead_ns),
            col("lifecycle_ns", &RunReport::lifecycle_ns),
            col("encryption_charge_ns", &RunReport::encryption_charge_ns),
            col("verification_charge_ns", &RunReport::verification_charge_ns),
            col("cores", &RunReport::cores),
            col("counter_cache_hit_rate", &RunReport::counter_cache_hit_rate),
            col("mapping_cache_hit_rate", &RunReport::mapping_cache_hit_rate),
            col("translations", &RunReport::translations),
            col("mapping_misses", &RunReport::mapping_misses),
            col("world_switches", &RunReport::world_switches),
            col("lifecycle_switches", &RunReport::lifecycle_switches),
            col("encryption_extra_pct", &RunReport::encryption_extra_pct),
            col("verification_extra_pct", &RunReport::verification_extra_pct),
            col("secure_accesses", &RunReport::secure_accesses),
            col("mean_encryption_latency_ns", &RunReport::mean_encryption_latency_ns),
            col("mean_verification_latency_ns", &RunReport::mean_verification_latency_ns),
            col("events", &RunReport::events),
            col("trace_digest", &RunReport::trace_digest),
        };
        v.push_back(Column{
            "tees",
            [](const RunReport& r) {
                std::string s;
                for (const auto& t : r.tees) {
                    if (!s.empty()) {
                        s += ';';
                    }
                    s += encode_tee(t);
                }
                return s;
            },
            [](RunReport& r, std::string_view s) {
                r.tees.clear();
                if (s.empty()) {
                    return;
                }
                for (auto e : split(s, ';')) {
                    r.tees.push_back(decode_tee(e));
                }
            }});
        return v;
    }();
    return c;
}

} // namespace

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& c : columns()) {
            n.push_back(c.name);
        }
        return n;
    }();
    return names;
}

std::string csv_header() {
    std::string s;
    for (const auto& n : csv_columns()) {
        if (!s.empty()) {
            s += ',';
        }
        s += n;
    }
    return s;
}

std::string csv_row(const RunReport& report) {
    std::string s;
    bool first = true;
    for (const auto& c : columns()) {
        if (!first) {
            s += ',';
        }
        first = false;
        s += c.get(report);
    }
    return s;
}

void write_csv(std::ostream& out, const std::vector<RunReport>& reports) {
    out << csv_header() << '\n';
    for (const auto& r : reports) {
        out << csv_row(r) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<RunReport>& reports) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_csv(f, reports);
    f.flush();
    if (!f) {
        throw IoError("write to " + path.string() + " failed");
    }
}

std::vector<RunReport> parse_csv(std::string_view text) {
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (lines.empty() || lines.front() != csv_header()) {
        throw ConfigError("csv: header does not match the report schema");
    }
    const auto& cols = columns();
    std::vector<RunReport> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i], ',');
        if (cells.size() != cols.size()) {
            throw ConfigError("csv: row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(cols.size()));
        }
        RunReport r;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            cols[c].set(r, cells[c]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace ssdtee::bench
