#include "ssdtee/bench/config.hpp"

#include "ssdtee/error.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ssdtee::bench {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

/// One JSON object being read; remembers which keys were consumed so the
/// leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(where() + " must be an object");
        }
    }

    template <typename T>
    void uint(const char* key, T& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
                throw ConfigError(where(key) + " must be a non-negative integer");
            }
            const auto x = v->get<std::uint64_t>();
            if (x > std::numeric_limits<T>::max()) {
                throw ConfigError(where(key) + " is out of range");
            }
            out = static_cast<T>(x);
        }
    }
    void real(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) {
                throw ConfigError(where(key) + " must be a number");
            }
            out = v->get<double>();
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) {
                throw ConfigError(where(key) + " must be true or false");
            }
            out = v->get<bool>();
        }
    }
    void uint_list(const char* key, std::vector<std::uint64_t>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) {
                throw ConfigError(where(key) + " must be an array");
            }
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
                    throw ConfigError(where(key) + " must hold non-negative integers");
                }
                out.push_back(x.get<std::uint64_t>());
            }
        }
    }
    void string_list(const char* key, std::vector<std::string>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) {
                throw ConfigError(where(key) + " must be an array");
            }
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_string()) {
                    throw ConfigError(where(key) + " must hold strings");
                }
                out.push_back(x.get<std::string>());
            }
        }
    }
    const json* object(const char* key) { return take(key); }
    [[nodiscard]] std::string where(const char* key = nullptr) const {
        std::string w = path_.empty() ? "config" : path_;
        if (key != nullptr) {
            w += (path_.empty() ? std::string(": ") : std::string(".")) + key;
        }
        return w;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) {
                throw ConfigError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
            }
        }
    }

private:
    const json* take(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename F>
void with(Section& parent, const char* key, const std::string& path, F&& f) {
    if (const json* v = parent.object(key)) {
        Section s(*v, path);
        f(s);
        s.finish();
    }
}

} // namespace

const char* to_string(Scenario s) noexcept {
    switch (s) {
    case Scenario::Host: return "host";
    case Scenario::HostSgx: return "host-sgx";
    case Scenario::Isc: return "isc";
    case Scenario::IceClave: return "iceclave";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    for (Scenario s : all_scenarios()) {
        if (name == to_string(s)) {
            return s;
        }
    }
    throw ConfigError("unknown scenario '" + std::string(name) + "' (host, host-sgx, isc, iceclave)");
}

const std::vector<Scenario>& all_scenarios() {
    static const std::vector<Scenario> all{Scenario::Host, Scenario::HostSgx, Scenario::Isc, Scenario::IceClave};
    return all;
}

const char* to_string(Axis a) noexcept {
    switch (a) {
    case Axis::Channels: return "channels";
    case Axis::ReadLatency: return "t_rd";
    case Axis::Dram: return "dram";
    case Axis::Tenants: return "tenants";
    }
    return "?";
}

Axis parse_axis(std::string_view name) {
    for (Axis a : {Axis::Channels, Axis::ReadLatency, Axis::Dram, Axis::Tenants}) {
        if (name == to_string(a)) {
            return a;
        }
    }
    throw UnknownAxis("unknown sweep axis '" + std::string(name) + "' (channels, t_rd, dram, tenants)");
}

const std::vector<std::uint64_t>& SweepConfig::values(Axis a) const {
    switch (a) {
    case Axis::Channels: return channels;
    case Axis::ReadLatency: return t_rd_ns;
    case Axis::Dram: return dram_bytes;
    case Axis::Tenants: return tenants;
    }
    return channels;
}

void RunConfig::validate() const {
    geometry.validate();
    latency.validate();
    ftl.validate();
    secure_memory.validate();
    runtime.validate();
    if (!(host.speedup > 0.0) || !(host.sgx_multiplier >= 1.0) || host.queue_depth == 0) {
        throw ConfigError("host.speedup and host.queue_depth must be positive and host.sgx_multiplier at least 1");
    }
    if (scenarios.empty() || workloads.empty()) {
        throw ConfigError("run.scenarios and run.workloads must not be empty");
    }
    for (const auto& w : workloads) {
        (void)resolve_workload(*this, w);
    }
    for (const auto& [name, cal] : calibration) {
        (void)workloads::find(name);
    }
    if (tenants == 0 || tenants > 64) {
        throw ConfigError("run.tenants must be 1..64");
    }
    if (program_bytes == 0) {
        throw ConfigError("run.program_bytes must be positive");
    }
    if (geometry.page_bytes != 4096) {
        throw ConfigError("geometry.page_bytes must be 4096");
    }
    for (Axis a : {Axis::Channels, Axis::ReadLatency, Axis::Dram, Axis::Tenants}) {
        for (auto v : sweep.values(a)) {
            if (v == 0) {
                throw ConfigError(std::string("sweep.") + to_string(a) + " values must be positive");
            }
        }
    }
}

workloads::WorkloadSpec resolve_workload(const RunConfig& config, const std::string& name) {
    workloads::WorkloadSpec s = workloads::find(name);
    if (auto it = config.calibration.find(name); it != config.calibration.end()) {
        if (it->second.storage_compute_ns_per_record != 0) {
            s.storage_compute_ns_per_record = it->second.storage_compute_ns_per_record;
        }
        if (it->second.host_compute_ns_per_record != 0) {
            s.host_compute_ns_per_record = it->second.host_compute_ns_per_record;
        }
    }
    return s;
}

RunConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    RunConfig c;
    Section top(root, "");
    with(top, "geometry", "geometry", [&](Section& s) {
        s.uint("channels", c.geometry.channels);
        s.uint("chips_per_channel", c.geometry.chips_per_channel);
        s.uint("dies_per_chip", c.geometry.dies_per_chip);
        s.uint("planes_per_die", c.geometry.planes_per_die);
        s.uint("blocks_per_plane", c.geometry.blocks_per_plane);
        s.uint("pages_per_block", c.geometry.pages_per_block);
        s.uint("page_bytes", c.geometry.page_bytes);
    });
    with(top, "latency", "latency", [&](Section& s) {
        s.uint("t_rd_ns", c.latency.t_rd_ns);
        s.uint("t_wr_ns", c.latency.t_wr_ns);
        s.uint("t_erase_ns", c.latency.t_erase_ns);
        s.uint("channel_bw_bytes_per_s", c.latency.channel_bw_bytes_per_s);
        s.uint("dram_access_ns", c.latency.dram_access_ns);
        s.uint("aes_pad_ns", c.latency.aes_pad_ns);
        s.uint("world_switch_ns", c.latency.world_switch_ns);
        s.uint("tee_create_ns", c.latency.tee_create_ns);
        s.uint("tee_delete_ns", c.latency.tee_delete_ns);
        s.uint("host_link_bw_bytes_per_s", c.latency.host_link_bw_bytes_per_s);
    });
    with(top, "ftl", "ftl", [&](Section& s) {
        s.real("cache_fraction", c.ftl.cache_fraction);
        s.uint("cache_entries", c.ftl.cache_entries);
        s.uint("entries_per_frame", c.ftl.entries_per_frame);
        s.uint("logical_pages", c.ftl.logical_pages);
        s.real("gc_free_block_low_watermark", c.ftl.gc.free_block_low_watermark);
    });
    with(top, "secure_memory", "secure_memory", [&](Section& s) {
        s.uint("counter_cache_bytes", c.secure_memory.counter_cache_bytes);
        s.uint("counter_cache_ways", c.secure_memory.counter_cache_ways);
        s.uint("mac_check_ns", c.secure_memory.mac_check_ns);
        s.boolean("pad_overlap", c.secure_memory.pad_overlap);
        s.uint("ro_slots", c.secure_memory.ro_slots);
        s.uint("rw_slots", c.secure_memory.rw_slots);
        s.uint("key_seed", c.secure_memory.key_seed);
    });
    with(top, "runtime", "runtime", [&](Section& s) {
        s.uint("storage_cores", c.runtime.storage_cores);
        s.uint("prefetch_window", c.runtime.prefetch_window);
        s.uint("heap_bytes", c.runtime.heap_bytes);
        s.uint("dram_line_ns", c.runtime.dram_line_ns);
        s.uint("dram_bytes", c.runtime.regions.dram_bytes);
        s.uint("protected_bytes", c.runtime.regions.protected_bytes);
        s.uint("secure_bytes", c.runtime.regions.secure_bytes);
        s.uint("cipher_bits_per_cycle", c.runtime.cipher.bits_per_cycle);
        s.uint("cipher_clock_hz", c.runtime.cipher.engine_clock_hz);
        s.uint("key_seed", c.runtime.key_seed);
    });
    with(top, "host", "host", [&](Section& s) {
        s.real("speedup", c.host.speedup);
        s.real("sgx_multiplier", c.host.sgx_multiplier);
        s.uint("queue_depth", c.host.queue_depth);
    });
    if (const json* cal = top.object("calibration")) {
        Section all(*cal, "calibration");
        for (const auto& [name, body] : cal->items()) {
            const std::string path = "calibration." + name;
            with(all, name.c_str(), path, [&](Section& s) {
                Calibration k;
                s.uint("storage_compute_ns_per_record", k.storage_compute_ns_per_record);
                s.uint("host_compute_ns_per_record", k.host_compute_ns_per_record);
                c.calibration[name] = k;
            });
        }
        all.finish();
    }
    with(top, "run", "run", [&](Section& s) {
        std::vector<std::string> names;
        s.string_list("scenarios", names);
        if (!names.empty()) {
            c.scenarios.clear();
            for (const auto& n : names) {
                c.scenarios.push_back(parse_scenario(n));
            }
        }
        s.string_list("workloads", c.workloads);
        s.uint("dataset_bytes", c.dataset_bytes);
        s.uint("program_bytes", c.program_bytes);
        s.uint("tenants", c.tenants);
        s.uint("seed", c.seed);
        s.boolean("faithful", c.faithful);
    });
    with(top, "sweep", "sweep", [&](Section& s) {
        s.uint_list("channels", c.sweep.channels);
        s.uint_list("t_rd_ns", c.sweep.t_rd_ns);
        s.uint_list("dram_bytes", c.sweep.dram_bytes);
        s.uint_list("tenants", c.sweep.tenants);
    });
    top.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
    ordered j;
    j["geometry"] = {{"channels", c.geometry.channels},
                     {"chips_per_channel", c.geometry.chips_per_channel},
                     {"dies_per_chip", c.geometry.dies_per_chip},
                     {"planes_per_die", c.geometry.planes_per_die},
                     {"blocks_per_plane", c.geometry.blocks_per_plane},
                     {"pages_per_block", c.geometry.pages_per_block},
                     {"page_bytes", c.geometry.page_bytes}};
    j["latency"] = {{"t_rd_ns", c.latency.t_rd_ns},
                    {"t_wr_ns", c.latency.t_wr_ns},
                    {"t_erase_ns", c.latency.t_erase_ns},
                    {"channel_bw_bytes_per_s", c.latency.channel_bw_bytes_per_s},
                    {"dram_access_ns", c.latency.dram_access_ns},
                    {"aes_pad_ns", c.latency.aes_pad_ns},
                    {"world_switch_ns", c.latency.world_switch_ns},
                    {"tee_create_ns", c.latency.tee_create_ns},
                    {"tee_delete_ns", c.latency.tee_delete_ns},
                    {"host_link_bw_bytes_per_s", c.latency.host_link_bw_bytes_per_s}};
    j["ftl"] = {{"cache_fraction", c.ftl.cache_fraction},
                {"cache_entries", c.ftl.cache_entries},
                {"entries_per_frame", c.ftl.entries_per_frame},
                {"logical_pages", c.ftl.logical_pages},
                {"gc_free_block_low_watermark", c.ftl.gc.free_block_low_watermark}};
    j["secure_memory"] = {{"counter_cache_bytes", c.secure_memory.counter_cache_bytes},
                          {"counter_cache_ways", c.secure_memory.counter_cache_ways},
                          {"mac_check_ns", c.secure_memory.mac_check_ns},
                          {"pad_overlap", c.secure_memory.pad_overlap},
                          {"ro_slots", c.secure_memory.ro_slots},
                          {"rw_slots", c.secure_memory.rw_slots},
                          {"key_seed", c.secure_memory.key_seed}};
    j["runtime"] = {{"storage_cores", c.runtime.storage_cores},
                    {"prefetch_window", c.runtime.prefetch_window},
                    {"heap_bytes", c.runtime.heap_bytes},
                    {"dram_line_ns", c.runtime.dram_line_ns},
                    {"dram_bytes", c.runtime.regions.dram_bytes},
                    {"protected_bytes", c.runtime.regions.protected_bytes},
                    {"secure_bytes", c.runtime.regions.secure_bytes},
                    {"cipher_bits_per_cycle", c.runtime.cipher.bits_per_cycle},
                    {"cipher_clock_hz", c.runtime.cipher.engine_clock_hz},
                    {"key_seed", c.runtime.key_seed}};
    j["host"] = {{"speedup", c.host.speedup}, {"sgx_multiplier", c.host.sgx_multiplier},
                 {"queue_depth", c.host.queue_depth}};
    ordered cal = ordered::object();
    for (const auto& [name, k] : c.calibration) {
        cal[name] = {{"storage_compute_ns_per_record", k.storage_compute_ns_per_record},
                     {"host_compute_ns_per_record", k.host_compute_ns_per_record}};
    }
    j["calibration"] = cal;
    std::vector<std::string> scen;
    for (Scenario s : c.scenarios) {
        scen.emplace_back(to_string(s));
    }
    j["run"] = {{"scenarios", scen},
                {"workloads", c.workloads},
                {"dataset_bytes", c.dataset_bytes},
                {"program_bytes", c.program_bytes},
                {"tenants", c.tenants},
                {"seed", c.seed},
                {"faithful", c.faithful}};
    j["sweep"] = {{"channels", c.sweep.channels},
                  {"t_rd_ns", c.sweep.t_rd_ns},
                  {"dram_bytes", c.sweep.dram_bytes},
                  {"tenants", c.sweep.tenants}};
    return j.dump(2) + "\n";
}

} // namespace ssdtee::bench
