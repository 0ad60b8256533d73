#include "ssdtee/bench/scenario.hpp"
#include "ssdtee/cipher/engine.hpp"
#include "ssdtee/cipher/trivium.hpp"
#include "ssdtee/ftl/ftl.hpp"
#include "ssdtee/secmem/counter_cache.hpp"
#include "ssdtee/secmem/secure_memory.hpp"

#include <benchmark/benchmark.h>

using namespace ssdtee;

namespace {

void BM_TriviumFast(benchmark::State& state) {
    cipher::Trivium t(cipher::Block80{1, 2, 3}, cipher::Block80{4, 5, 6});
    std::vector<std::uint8_t> buf(4096);
    for (auto _ : state) {
        t.generate(buf);
        benchmark::DoNotOptimize(buf.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_TriviumFast);

void BM_TriviumReference(benchmark::State& state) {
    cipher::ReferenceTrivium t(cipher::Block80{1, 2, 3}, cipher::Block80{4, 5, 6});
    std::vector<std::uint8_t> buf(4096);
    for (auto _ : state) {
        t.generate(buf);
        benchmark::DoNotOptimize(buf.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_TriviumReference);

void BM_PageEncrypt(benchmark::State& state) {
    cipher::IvGenerator ivs(1);
    cipher::CipherEngine engine(cipher::CipherKey::derive(1), ivs);
    std::vector<std::uint8_t> page(4096, 0x5a);
    std::uint64_t ppa = 0;
    for (auto _ : state) {
        auto enc = engine.encrypt_page(Ppa{ppa++ % (1ULL << 20)}, page);
        benchmark::DoNotOptimize(enc.ciphertext.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_PageEncrypt);

void BM_CounterCache(benchmark::State& state) {
    secmem::CounterCache cache(128 * 1024, 8);
    sim::Rng rng(3);
    const auto span = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cache.access(rng.below(span), false));
    }
    state.counters["hit_rate"] =
        static_cast<double>(cache.hits()) / static_cast<double>(cache.hits() + cache.misses());
}
BENCHMARK(BM_CounterCache)->Arg(1024)->Arg(4096)->Arg(65536);

void BM_SecureRead(benchmark::State& state) {
    secmem::SecureMemoryConfig c;
    c.functional = state.range(0) != 0;
    secmem::SecureMemory m(c);
    for (std::uint64_t p = 0; p < 256; ++p) {
        m.register_page(p, secmem::PageClass::Writable);
    }
    sim::Rng rng(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(m.secure_read(rng.below(256 * 4096) & ~63ULL, 64));
    }
}
BENCHMARK(BM_SecureRead)->Arg(0)->Arg(1);

void BM_FtlTranslate(benchmark::State& state) {
    sim::Kernel kernel;
    flash::FlashStore flash(kernel, flash::FlashGeometry{}, flash::LatencyConfig{});
    ftl::Ftl f(flash);
    constexpr std::uint64_t kLpas = 1 << 16;
    for (std::uint64_t l = 0; l < kLpas; ++l) {
        f.write_lpa_untimed(Lpa{l}, flash::PageData{}, kFtlTeeId);
    }
    sim::Rng rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.translate(Lpa{rng.below(kLpas)}, kFtlTeeId));
    }
}
BENCHMARK(BM_FtlTranslate);

void BM_Scenario(benchmark::State& state) {
    bench::RunConfig c;
    c.dataset_bytes = 16ULL << 20;
    const auto scenario = static_cast<bench::Scenario>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(bench::run_scenario(c, scenario, "tpch-q3"));
    }
    state.SetLabel(bench::to_string(scenario));
}
BENCHMARK(BM_Scenario)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
