// Writes Trivium test vectors with the bit-serial reference implementation.
// Line format: <key hex> <iv hex> <keystream hex>

#include "ssdtee/cipher/trivium.hpp"
#include "ssdtee/sim/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

std::string hex(const std::uint8_t* p, std::size_t n) {
    static const char* digits = "0123456789ABCDEF";
    std::string s;
    s.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(digits[p[i] >> 4]);
        s.push_back(digits[p[i] & 15]);
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate Trivium keystream vectors with the reference implementation"};
    std::string out_path;
    std::size_t bytes = 8192;
    int count = 4;
    std::uint64_t seed = 2024;
    app.add_option("-o,--out", out_path, "Output file (stdout if omitted)");
    app.add_option("-n,--bytes", bytes, "Keystream bytes per vector");
    app.add_option("-c,--count", count, "Random vectors after the fixed ones");
    app.add_option("--seed", seed, "Seed for random keys and IVs");
    CLI11_PARSE(app, argc, argv);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "cannot open " << out_path << '\n';
            return 1;
        }
        out = &file;
    }

    std::vector<std::pair<ssdtee::cipher::Block80, ssdtee::cipher::Block80>> inputs;
    ssdtee::cipher::Block80 k{};
    k[0] = 0x80;
    inputs.emplace_back(k, ssdtee::cipher::Block80{});
    ssdtee::cipher::Block80 iv{};
    iv[0] = 0x80;
    inputs.emplace_back(ssdtee::cipher::Block80{}, iv);
    ssdtee::sim::Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        ssdtee::cipher::Block80 a{}, b{};
        for (auto& x : a) {
            x = static_cast<std::uint8_t>(rng.next_u64());
        }
        for (auto& x : b) {
            x = static_cast<std::uint8_t>(rng.next_u64());
        }
        inputs.emplace_back(a, b);
    }

    *out << "# key iv keystream (" << bytes << " bytes)\n";
    std::vector<std::uint8_t> ks(bytes);
    for (const auto& [key, ivb] : inputs) {
        ssdtee::cipher::ReferenceTrivium ref(key, ivb);
        ref.generate(ks);
        *out << hex(key.data(), key.size()) << ' ' << hex(ivb.data(), ivb.size()) << ' ' << hex(ks.data(), ks.size())
             << '\n';
    }
    return 0;
}
