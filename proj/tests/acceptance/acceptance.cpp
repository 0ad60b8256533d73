// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "../oracle/reference_ftl.hpp"

#include "ssdtee/bench/report.hpp"
#include "ssdtee/bench/scenario.hpp"
#include "ssdtee/cipher/engine.hpp"
#include "ssdtee/cipher/trivium.hpp"
#include "ssdtee/error.hpp"
#include "ssdtee/ftl/ftl.hpp"
#include "ssdtee/runtime/runtime.hpp"
#include "ssdtee/secmem/secure_memory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>

using namespace ssdtee;
using bench::RunConfig;
using bench::RunReport;
using bench::Scenario;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fixed(double v, int digits = 2) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// ---- 1: cipher ----

std::vector<std::uint8_t> from_hex(const std::string& hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
    }
    return out;
}

cipher::Block80 block_of(const std::vector<std::uint8_t>& v) {
    cipher::Block80 b{};
    std::copy_n(v.begin(), std::min(v.size(), b.size()), b.begin());
    return b;
}

Verdict cipher_correctness() {
    Verdict v;
    constexpr std::size_t kBytes = 8192; // 2^16 bits
    std::vector<std::pair<cipher::Block80, cipher::Block80>> pairs;
    std::ifstream in(std::string(SSDTEE_TEST_DATA_DIR) + "/trivium_vectors.txt");
    std::string line;
    std::size_t published = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream f(line);
        std::string k, iv, ks;
        f >> k >> iv >> ks;
        const auto expect = from_hex(ks);
        const auto key = block_of(from_hex(k));
        const auto ivb = block_of(from_hex(iv));
        cipher::ReferenceTrivium ref(key, ivb);
        std::vector<std::uint8_t> r(expect.size());
        ref.generate(r);
        v.require(r == expect, "reference disagrees with vector file line " + std::to_string(published));
        pairs.emplace_back(key, ivb);
        ++published;
    }
    v.require(published >= 3, "vector file has " + std::to_string(published) + " entries");
    sim::Rng rng(0x7717);
    for (int i = 0; i < 3; ++i) {
        cipher::Block80 k{};
        cipher::Block80 iv{};
        for (auto& b : k) {
            b = static_cast<std::uint8_t>(rng.next_u64());
        }
        for (auto& b : iv) {
            b = static_cast<std::uint8_t>(rng.next_u64());
        }
        pairs.emplace_back(k, iv);
    }
    std::size_t mismatched = 0;
    for (const auto& [k, iv] : pairs) {
        cipher::ReferenceTrivium ref(k, iv);
        std::vector<std::uint8_t> expect(kBytes);
        ref.generate(expect);
        mismatched += cipher::keystream(k, iv, kBytes) != expect;
    }
    v.require(mismatched == 0, std::to_string(mismatched) + " keystreams differ from the reference");

    cipher::IvGenerator ivs(21);
    cipher::CipherEngine engine(cipher::CipherKey::derive(42), ivs);
    std::size_t failures = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::uint8_t> page(4096);
        for (auto& b : page) {
            b = static_cast<std::uint8_t>(rng.next_u64());
        }
        const auto enc = engine.encrypt_page(Ppa{rng.below(1ULL << 28)}, page);
        failures += enc.ciphertext == page || engine.decrypt_page(enc.iv, enc.ciphertext) != page;
    }
    v.require(failures == 0, std::to_string(failures) + " of 1000 page round trips failed");
    v.note(std::to_string(pairs.size()) + " (key, iv) pairs x 65536 bits, 1000 page round trips");
    return v;
}

// ---- 2: integrity ----

Verdict integrity_completeness() {
    using secmem::PageClass;
    using secmem::SecureMemory;
    using secmem::Tree;
    secmem::SecureMemoryConfig c;
    c.ro_slots = 512;
    c.rw_slots = 64;
    c.functional = true;

    std::uint64_t injected = 0;
    std::uint64_t detected = 0;
    auto probe = [&](const std::function<void()>& fn) {
        ++injected;
        try {
            fn();
        } catch (const IntegrityViolation&) {
            ++detected;
        }
    };
    const auto addr = [](std::uint32_t line) { return std::uint64_t{line} * secmem::kLineBytes; };

    Verdict v;
    for (Tree t : {Tree::Writable, Tree::ReadOnly}) {
        SecureMemory m(c);
        std::vector<std::uint8_t> page(secmem::kPageBytes);
        std::iota(page.begin(), page.end(), std::uint8_t{7});
        if (t == Tree::Writable) {
            m.register_page(0, PageClass::Writable);
            m.secure_write(0, secmem::kPageBytes, page);
        } else {
            m.register_page(0, PageClass::ReadOnly);
            m.load_page(0, page);
        }
        v.require(m.path_length(t) == 2, "toy tree is not two levels");
        for (std::uint32_t line = 0; line < secmem::kLinesPerPage; ++line) {
            for (std::uint32_t bit = 0; bit < 512; ++bit) {
                m.flip_data_bit(0, line, bit);
                probe([&] { m.secure_read(addr(line), 64); });
                m.flip_data_bit(0, line, bit);
            }
            for (std::uint32_t bit = 0; bit < 64; ++bit) {
                m.flip_mac_bit(0, line, bit);
                probe([&] { m.secure_read(addr(line), 64); });
                m.flip_mac_bit(0, line, bit);
            }
        }
        for (std::uint64_t leaf = 0; leaf < m.leaves(t); ++leaf) {
            for (std::uint32_t bit = 0; bit < 512; ++bit) {
                m.flip_counter_bit(t, leaf, bit);
                probe([&] { m.verify_root(t); });
                m.flip_counter_bit(t, leaf, bit);
            }
        }
        for (std::uint32_t level = 1; level <= m.path_length(t); ++level) {
            for (std::uint64_t node = 0; node < m.nodes_at(t, level); ++node) {
                for (std::uint32_t bit = 0; bit < 512; ++bit) {
                    m.flip_node_bit(t, level, node, bit);
                    probe([&] { m.verify_root(t); });
                    m.flip_node_bit(t, level, node, bit);
                }
            }
        }
        try {
            m.verify_root(t);
            std::vector<std::uint8_t> back(secmem::kPageBytes);
            m.secure_read(0, secmem::kPageBytes, back);
            v.require(back == page, "restored page reads back wrong");
        } catch (const IntegrityViolation&) {
            v.require(false, "restored memory fails verification");
        }
    }
    v.require(detected == injected, std::to_string(injected - detected) + " flips missed");
    v.note(std::to_string(detected) + "/" + std::to_string(injected) + " single-bit flips detected");
    return v;
}

// ---- 3: isolation ----

flash::FlashGeometry tiny(std::uint32_t channels, std::uint32_t blocks, std::uint32_t pages) {
    flash::FlashGeometry g;
    g.channels = channels;
    g.chips_per_channel = 1;
    g.dies_per_chip = 1;
    g.planes_per_die = 1;
    g.blocks_per_plane = blocks;
    g.pages_per_block = pages;
    return g;
}

flash::PageData tagged(std::uint64_t v) {
    flash::PageData d;
    d.digest = v;
    return d;
}

/// Every owner assignment of a 4-LPA group (5^4 patterns, 0 = FTL-owned),
/// tiled over 64 LPAs with a per-group rotation; each of 4 TEEs then tries
/// to translate and write every LPA.
void exhaustive_ownership(Verdict& v) {
    constexpr std::uint64_t kLpas = 64;
    std::uint64_t cross_ok = 0;
    std::uint64_t own_denied = 0;
    std::uint64_t attempts = 0;
    for (std::uint64_t pattern = 0; pattern < 625; ++pattern) {
        sim::Kernel kernel;
        flash::FlashStore flash(kernel, tiny(2, 16, 8), flash::LatencyConfig{});
        ftl::FtlConfig fc;
        fc.logical_pages = kLpas;
        ftl::Ftl f(flash, fc);
        std::vector<std::uint8_t> owner(kLpas);
        for (std::uint64_t l = 0; l < kLpas; ++l) {
            std::uint64_t digit = pattern;
            for (std::uint64_t i = 0; i < l % 4; ++i) {
                digit /= 5;
            }
            owner[l] = static_cast<std::uint8_t>((digit % 5 + l / 4) % 5);
            f.write_lpa_untimed(Lpa{l}, tagged(l), kFtlTeeId);
            if (owner[l] != 0) {
                const Lpa one{l};
                f.set_id_bits(std::span(&one, 1), TeeId{owner[l]});
            }
        }
        for (std::uint8_t tee = 1; tee <= 4; ++tee) {
            for (std::uint64_t l = 0; l < kLpas; ++l) {
                const bool mine = owner[l] == tee;
                for (int op = 0; op < 2; ++op) {
                    ++attempts;
                    bool ok = true;
                    try {
                        if (op == 0) {
                            (void)f.translate(Lpa{l}, TeeId{tee});
                        } else {
                            f.write_lpa_untimed(Lpa{l}, tagged(1000 + l), TeeId{tee});
                        }
                    } catch (const PermissionDenied&) {
                        ok = false;
                    }
                    cross_ok += ok && !mine;
                    own_denied += !ok && mine;
                }
            }
        }
    }
    v.require(cross_ok == 0, std::to_string(cross_ok) + " cross-TEE accesses succeeded");
    v.require(own_denied == 0, std::to_string(own_denied) + " owner accesses denied");
    v.note(std::to_string(attempts) + " ownership probes");
}

/// Four tenants on fixed datasets; any subset run together must give each
/// TEE the result it gets alone.
void tenant_results_match_solo(Verdict& v) {
    const char* names[] = {"filter", "tpch-q14", "tpcb", "wordcount"};
    constexpr std::uint64_t kPages = 2048;
    auto run = [&](const std::vector<std::uint32_t>& which) {
        sim::Kernel kernel(1);
        flash::FlashStore flash(kernel, flash::FlashGeometry{}, flash::LatencyConfig{}, true);
        ftl::Ftl f(flash);
        secmem::SecureMemoryConfig mc;
        mc.functional = true;
        secmem::SecureMemory mem(mc);
        runtime::RuntimeConfig rc;
        rc.secure = true;
        runtime::Runtime rt(kernel, f, &mem, rc);
        std::deque<workloads::Dataset> ds;
        for (std::uint32_t i = 0; i < 4; ++i) {
            ds.push_back(workloads::build_dataset(
                workloads::DatasetConfig{kPages * 4096, i * (kPages + 16), 100 + i}, f));
        }
        for (auto i : which) {
            const auto& spec = workloads::find(names[i]);
            runtime::OffloadRequest r;
            r.tid = i + 1;
            r.lpa = ds[i].lpas();
            for (std::uint64_t k = 0; k < 16; ++k) {
                r.output_lpa.push_back(Lpa{ds[i].first_lpa() + kPages + k});
            }
            r.bin = runtime::WorkloadBinding{
                &spec, &ds[i], std::make_shared<const workloads::AccessTrace>(workloads::generate_trace(spec, ds[i], i))};
            rt.submit(std::move(r));
        }
        kernel.run_until_idle();
        std::map<std::uint32_t, std::vector<std::uint8_t>> out;
        for (auto i : which) {
            const auto& d = rt.tee(i + 1);
            if (d.state == runtime::TeeState::Terminated && d.result) {
                out[i] = *d.result;
                v.require(workloads::verify_result(workloads::find(names[i]), ds[i], *d.result),
                          std::string(names[i]) + " result does not verify");
            } else {
                v.require(false, std::string(names[i]) + " did not terminate");
            }
        }
        v.require(rt.stats().cross_tee_reads == 0, "cross-TEE reads observed");
        return out;
    };
    std::map<std::uint32_t, std::vector<std::uint8_t>> solo;
    for (std::uint32_t i = 0; i < 4; ++i) {
        solo[i] = run({i}).at(i);
    }
    std::size_t compared = 0;
    for (const auto& group : std::vector<std::vector<std::uint32_t>>{{0, 1}, {2, 3}, {1, 3}, {0, 1, 2, 3}}) {
        for (const auto& [i, blob] : run(group)) {
            v.require(blob == solo.at(i), std::string(names[i]) + " differs from its solo run with " +
                                              std::to_string(group.size()) + " tenants");
            ++compared;
        }
    }
    v.note(std::to_string(compared) + " multi-tenant results bit-identical to solo");
}

Verdict isolation() {
    Verdict v;
    exhaustive_ownership(v);
    tenant_results_match_solo(v);
    return v;
}

// ---- 4: FTL equivalence ----

struct OracleCase {
    std::uint32_t channels;
    std::uint32_t blocks;
    std::uint32_t pages;
    std::uint64_t lpas;
    double watermark;
};

std::string compare_with_oracle(const OracleCase& oc, const std::vector<std::uint64_t>& script) {
    sim::Kernel kernel;
    flash::FlashStore flash(kernel, tiny(oc.channels, oc.blocks, oc.pages), flash::LatencyConfig{});
    ftl::FtlConfig c;
    c.gc.free_block_low_watermark = oc.watermark;
    c.logical_pages = oc.lpas;
    ftl::Ftl f(flash, c);
    const std::uint32_t total = oc.channels * oc.blocks;
    std::vector<std::uint32_t> unit_of(total);
    std::vector<std::uint32_t> order(oc.channels);
    for (std::uint32_t b = 0; b < total; ++b) {
        unit_of[b] = b / oc.blocks;
    }
    std::iota(order.begin(), order.end(), 0U);
    oracle::ReferenceFtl ref(total, oc.pages, unit_of, order, oc.watermark);
    for (std::size_t step = 0; step < script.size(); ++step) {
        bool full = false;
        bool ref_full = false;
        try {
            f.write_lpa_untimed(Lpa{script[step]}, tagged(step), kFtlTeeId);
        } catch (const DeviceFull&) {
            full = true;
        }
        try {
            ref.write(script[step]);
        } catch (const oracle::RefDeviceFull&) {
            ref_full = true;
        }
        const std::string at = " at step " + std::to_string(step);
        if (full != ref_full) {
            return "device-full disagreement" + at;
        }
        if (full) {
            return {};
        }
        if (f.gc_totals().pages_migrated != ref.migrations() || f.gc_totals().blocks_erased != ref.erases()) {
            return "migration or erase count differs" + at;
        }
        for (const auto& [l, p] : ref.mapping()) {
            if (f.entry(Lpa{l}).ppa().value != p) {
                return "mapping of lpa " + std::to_string(l) + " differs" + at;
            }
        }
        for (std::uint32_t b = 0; b < total; ++b) {
            if (flash.block(b).erase_count != ref.blocks()[b].erases) {
                return "erase count of block " + std::to_string(b) + " differs" + at;
            }
        }
        if (const auto a = f.audit(); !a.empty()) {
            return "audit: " + a + at;
        }
    }
    return {};
}

Verdict ftl_equivalence() {
    Verdict v;
    std::size_t cases = 0;
    auto check = [&](const OracleCase& oc, const std::vector<std::uint64_t>& script, const std::string& name) {
        ++cases;
        const auto err = compare_with_oracle(oc, script);
        v.require(err.empty(), name + ": " + err);
    };
    std::vector<std::uint64_t> seq;
    for (int round = 0; round < 20; ++round) {
        for (std::uint64_t l = 0; l < 20; ++l) {
            seq.push_back(l);
        }
    }
    check({1, 4, 8, 20, 0.3}, seq, "sequential overwrites");
    std::vector<std::uint64_t> hot;
    for (std::uint64_t l = 0; l < 16; ++l) {
        hot.push_back(l);
    }
    for (int i = 0; i < 300; ++i) {
        hot.push_back(static_cast<std::uint64_t>(i % 3));
    }
    check({1, 4, 8, 16, 0.3}, hot, "hot/cold");
    std::vector<std::uint64_t> fill(40);
    std::iota(fill.begin(), fill.end(), 0U);
    check({1, 4, 8, 40, 0.3}, fill, "fill until full");
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        sim::Rng rng(seed);
        const bool two = seed % 2 == 0;
        const std::uint64_t lpas = 8 + rng.below(two ? 7 : 14);
        std::vector<std::uint64_t> script;
        for (int i = 0; i < 400; ++i) {
            script.push_back(rng.below(lpas));
        }
        check(two ? OracleCase{2, 2, 8, lpas, 0.3} : OracleCase{1, 4, 8, lpas, 0.3}, script,
              "random seed " + std::to_string(seed));
    }
    v.note(std::to_string(cases) + " scripted patterns on 4-block x 8-page devices");
    return v;
}

// ---- 5-10: default-config runs ----

struct Suite {
    std::map<std::string, std::map<Scenario, RunReport>> runs;
    std::vector<std::string> scans;
    std::vector<std::string> read_intensive;
};

Suite run_default_suite() {
    Suite s;
    const RunConfig c;
    for (const auto& spec : workloads::registry()) {
        for (Scenario sc : bench::all_scenarios()) {
            s.runs[spec.name][sc] = bench::run_scenario(c, sc, spec.name);
        }
        if (spec.category == workloads::Category::Scan) {
            s.scans.push_back(spec.name);
        }
        if (workloads::read_intensive(spec)) {
            s.read_intensive.push_back(spec.name);
        }
    }
    return s;
}

double overhead_pct(const Suite& s, const std::string& w) {
    const auto& r = s.runs.at(w);
    return 100.0 * (static_cast<double>(r.at(Scenario::IceClave).makespan_ns) /
                        static_cast<double>(r.at(Scenario::Isc).makespan_ns) -
                    1.0);
}

double speedup(const RunReport& host, const RunReport& ice) {
    return static_cast<double>(host.makespan_ns) / static_cast<double>(ice.makespan_ns);
}

Verdict overhead_band(const Suite& s) {
    Verdict v;
    double sum = 0.0;
    double worst = 0.0;
    std::string worst_name;
    for (const auto& w : s.read_intensive) {
        const double o = overhead_pct(s, w);
        sum += o;
        if (o > worst) {
            worst = o;
            worst_name = w;
        }
    }
    for (const auto& [w, r] : s.runs) {
        const double o = overhead_pct(s, w);
        v.require(o <= 30.0, w + " overhead " + fixed(o) + "% > 30%");
    }
    const double mean = sum / static_cast<double>(s.read_intensive.size());
    v.require(mean >= 2.0 && mean <= 15.0, "mean " + fixed(mean) + "% outside [2, 15]");
    v.note("mean " + fixed(mean) + "% over " + std::to_string(s.read_intensive.size()) + " read-intensive, max " +
           fixed(worst) + "% (" + worst_name + ")");
    return v;
}

Verdict speedup_band(const Suite& s) {
    Verdict v;
    double sum = 0.0;
    for (const auto& w : s.scans) {
        sum += speedup(s.runs.at(w).at(Scenario::Host), s.runs.at(w).at(Scenario::IceClave));
    }
    const double mean = sum / static_cast<double>(s.scans.size());
    v.require(mean >= 1.5 && mean <= 4.0, "mean speedup " + fixed(mean) + "x outside [1.5, 4]");
    double worst_ratio_err = 0.0;
    for (const auto& [w, r] : s.runs) {
        const double ratio = r.at(Scenario::HostSgx).compute_ns / r.at(Scenario::Host).compute_ns;
        worst_ratio_err = std::max(worst_ratio_err, std::fabs(ratio - 2.03));
        v.require(r.at(Scenario::Host).compute_ns <= r.at(Scenario::HostSgx).compute_ns, w + ": sgx compute faster");
    }
    v.require(worst_ratio_err <= 1e-9, "sgx compute ratio off by " + std::to_string(worst_ratio_err));
    v.note("mean scan speedup " + fixed(mean) + "x at 8 channels; sgx/host compute = 2.03 (max error " +
           fixed(worst_ratio_err, 12) + ")");
    return v;
}

Verdict scaling_shape(const Suite& s) {
    Verdict v;
    RunConfig base;
    base.scenarios = {Scenario::Host, Scenario::IceClave};
    base.sweep.channels = {4, 8, 16, 32};
    std::string shape;
    for (const auto& w : s.scans) {
        base.workloads = {w};
        const auto r = bench::run_sweep(base, bench::Axis::Channels);
        std::vector<double> sp;
        for (std::size_t i = 0; i + 1 < r.size(); i += 2) {
            sp.push_back(speedup(r[i], r[i + 1]));
        }
        for (std::size_t i = 1; i < sp.size(); ++i) {
            v.require(sp[i] >= sp[i - 1], w + " speedup drops from " + fixed(sp[i - 1]) + " to " + fixed(sp[i]));
        }
        const double spread = *std::max_element(sp.begin(), sp.end()) / *std::min_element(sp.begin(), sp.end());
        v.require(spread >= 2.0, w + " max/min " + fixed(spread) + " < 2");
        shape += (shape.empty() ? "" : ", ") + w + " " + fixed(sp.front()) + "->" + fixed(sp.back()) + "x";
    }
    v.note(shape);
    return v;
}

Verdict traffic_ordering(const Suite& s) {
    Verdict v;
    auto enc = [&](const std::string& w) { return s.runs.at(w).at(Scenario::IceClave).encryption_extra_pct; };
    const double a = enc("arithmetic");
    const double q = enc("tpch-q19");
    const double wc = enc("wordcount");
    v.require(a < q && q < wc, "arithmetic " + fixed(a) + "%, q19 " + fixed(q) + "%, wordcount " + fixed(wc) + "%");
    std::map<workloads::Category, std::pair<double, double>> range;
    for (const auto& spec : workloads::registry()) {
        const auto& r = s.runs.at(spec.name).at(Scenario::IceClave);
        v.require(r.verification_extra_pct <= r.encryption_extra_pct, spec.name + ": verification above encryption");
        auto [it, fresh] = range.try_emplace(spec.category, r.encryption_extra_pct, r.encryption_extra_pct);
        if (!fresh) {
            it->second.first = std::min(it->second.first, r.encryption_extra_pct);
            it->second.second = std::max(it->second.second, r.encryption_extra_pct);
        }
        if (spec.category == workloads::Category::Scan) {
            v.require(r.encryption_extra_pct <= 10.0, spec.name + " encryption extra above 10%");
        }
    }
    v.require(range[workloads::Category::Scan].second < range[workloads::Category::Join].first &&
                  range[workloads::Category::Join].second < range[workloads::Category::WriteHeavy].first,
              "category ranges overlap");
    v.note("encryption extra: arithmetic " + fixed(a) + "% < q19 " + fixed(q) + "% < wordcount " + fixed(wc) +
           "%; joins " + fixed(range[workloads::Category::Join].first) + "-" +
           fixed(range[workloads::Category::Join].second) + "%, write-heavy " +
           fixed(range[workloads::Category::WriteHeavy].first) + "-" +
           fixed(range[workloads::Category::WriteHeavy].second) + "%");
    return v;
}

Verdict mapping_miss_rate(const Suite& s) {
    Verdict v;
    double worst = 0.0;
    for (const auto& w : s.scans) {
        worst = std::max(worst, s.runs.at(w).at(Scenario::IceClave).mapping_miss_rate());
    }
    v.require(worst < 0.01, "scan miss rate " + fixed(100 * worst, 3) + "% >= 1%");
    std::uint64_t checked = 0;
    for (const auto& [w, r] : s.runs) {
        const auto& ice = r.at(Scenario::IceClave);
        v.require(ice.world_switches == 2 * ice.mapping_misses + ice.lifecycle_switches, w + ": identity broken");
        for (const auto& t : ice.tees) {
            v.require(t.world_switches == 2 * t.mapping_misses + t.lifecycle_switches, w + ": per-tee identity broken");
            ++checked;
        }
    }
    v.note("max scan miss rate " + fixed(100 * worst, 3) + "%; switch identity exact on " + std::to_string(checked) +
           " TEEs");
    return v;
}

Verdict calibration_bands(const Suite& s) {
    Verdict v;
    double enc = 0.0;
    double ver = 0.0;
    double accesses = 0.0;
    for (const auto& [w, r] : s.runs) {
        const auto& ice = r.at(Scenario::IceClave);
        const auto n = static_cast<double>(ice.secure_accesses);
        enc += ice.mean_encryption_latency_ns * n;
        ver += ice.mean_verification_latency_ns * n;
        accesses += n;
    }
    enc /= accesses;
    ver /= accesses;
    v.require(enc >= 50.0 && enc <= 250.0, "encryption latency " + fixed(enc) + " ns outside [50, 250]");
    v.require(ver >= 75.0 && ver <= 350.0, "verification latency " + fixed(ver) + " ns outside [75, 350]");
    v.note("mean per-access encryption " + fixed(enc, 1) + " ns, verification " + fixed(ver, 1) + " ns");
    return v;
}

// ---- 11: determinism ----

Verdict determinism() {
    Verdict v;
    RunConfig c;
    c.dataset_bytes = 32ULL << 20;
    c.tenants = 2;
    c.workloads = {"filter", "tpch-q12", "tpcc"};
    auto once = [&] {
        std::ostringstream trace;
        std::ostringstream csv;
        bench::write_csv(csv, bench::run_all(c, &trace));
        RunConfig sweep = c;
        sweep.tenants = 1;
        sweep.workloads = {"aggregation"};
        sweep.sweep.t_rd_ns = {10'000, 110'000};
        bench::write_csv(csv, bench::run_sweep(sweep, bench::Axis::ReadLatency));
        return std::pair{trace.str(), csv.str()};
    };
    const auto a = once();
    const auto b = once();
    v.require(!a.first.empty() && a.first == b.first, "trace logs differ");
    v.require(a.second == b.second, "csv output differs");
    c.seed = 2;
    std::ostringstream other;
    (void)bench::run_all(c, &other);
    v.require(other.str() != a.first, "a different seed gives the same trace");
    v.note(std::to_string(a.first.size()) + " trace bytes and " + std::to_string(a.second.size()) +
           " csv bytes identical across runs");
    return v;
}

} // namespace

int main() {
    const auto started = std::chrono::steady_clock::now();
    int failed = 0;
    auto report = [&](int n, const char* name, const std::function<Verdict()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << n << ": " << name << "  [" << v.detail << "] ("
                  << fixed(secs, 1) << " s)" << std::endl;
    };

    report(1, "cipher correctness", cipher_correctness);
    report(2, "integrity completeness", integrity_completeness);
    report(3, "isolation", isolation);
    report(4, "FTL equivalence", ftl_equivalence);
    Suite suite;
    try {
        suite = run_default_suite();
    } catch (const std::exception& e) {
        std::cout << "default-config suite failed: " << e.what() << std::endl;
    }
    const bool have = !suite.runs.empty();
    auto needs = [&](const std::function<Verdict(const Suite&)>& fn) {
        return [&, fn] {
            if (!have) {
                return Verdict{false, "default-config runs unavailable"};
            }
            return fn(suite);
        };
    };
    report(5, "overhead band", needs(overhead_band));
    report(6, "speedup band", needs(speedup_band));
    report(7, "scaling shape", needs(scaling_shape));
    report(8, "traffic ordering", needs(traffic_ordering));
    report(9, "mapping miss rate", needs(mapping_miss_rate));
    report(10, "calibration bands", needs(calibration_bands));
    report(11, "determinism", determinism);

    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << " in "
              << fixed(total, 1) << " s" << std::endl;
    return failed == 0 ? 0 : 1;
}
