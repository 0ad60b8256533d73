#include "ssdtee/cipher/engine.hpp"

#include "ssdtee/error.hpp"

#include <stdexcept>
#include <string>

namespace ssdtee::cipher {

CipherKey CipherKey::derive(std::uint64_t seed) {
    Block80 b{};
    const std::uint64_t lo = sim::Rng::mix(seed ^ 0x4b45594b45594b45ULL);
    const std::uint64_t hi = sim::Rng::mix(lo);
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<std::uint8_t>(lo >> (8 * i));
    }
    b[8] = static_cast<std::uint8_t>(hi);
    b[9] = static_cast<std::uint8_t>(hi >> 8);
    return CipherKey(b);
}

Block80 CipherIv::bytes() const noexcept {
    const unsigned __int128 v = (static_cast<unsigned __int128>(ppa_bits) << temporal_width) | prng_bits;
    Block80 out{};
    for (int i = 0; i < 10; ++i) {
        out[i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    return out;
}

IvGenerator::IvGenerator(std::uint64_t seed, IvConfig config) : seed_(seed), config_(config), rng_(seed) {
    if (config_.spatial_bits + config_.temporal_bits != 80 || config_.temporal_bits == 0 ||
        config_.temporal_bits > 64 || config_.spatial_bits < 16) {
        throw ConfigError("IV split must sum to 80 with 1..64 temporal and >= 16 spatial bits");
    }
    rng_ = sim::Rng(sim::Rng::mix(seed_ ^ sim::Rng::mix(epoch_)));
}

void IvGenerator::roll_epoch() {
    ++epoch_;
    rng_ = sim::Rng(sim::Rng::mix(seed_ ^ sim::Rng::mix(epoch_)));
    ledger_.clear();
    per_ppa_.clear();
}

bool IvGenerator::issued(const CipherIv& iv) const { return ledger_.contains(Entry{iv.ppa_bits, iv.prng_bits}); }

CipherIv IvGenerator::next_iv(Ppa ppa) {
    if (config_.spatial_bits < 64 && ppa.value >= (std::uint64_t{1} << config_.spatial_bits)) {
        throw std::out_of_range("ppa does not fit the IV spatial field");
    }
    const std::uint64_t space =
        config_.temporal_bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << config_.temporal_bits);
    auto& used = per_ppa_[ppa.value];
    if (config_.temporal_bits < 64 && used >= space) {
        throw IvSpaceExhausted("no unused IV left for ppa " + std::to_string(ppa.value) + " in this epoch");
    }
    for (unsigned attempt = 0; attempt <= config_.max_redraws; ++attempt) {
        const std::uint64_t draw = config_.temporal_bits >= 64 ? rng_.next_u64() : rng_.below(space);
        if (ledger_.insert(Entry{ppa.value, draw}).second) {
            ++used;
            return CipherIv{ppa.value, draw, config_.temporal_bits};
        }
    }
    throw IvSpaceExhausted("IV redraw limit hit for ppa " + std::to_string(ppa.value));
}

void CipherTiming::validate() const {
    if (bits_per_cycle == 0 || engine_clock_hz == 0) {
        throw ConfigError("cipher timing fields must be > 0");
    }
}

std::vector<std::uint8_t> xor_stream(const CipherKey& key, const CipherIv& iv, std::span<const std::uint8_t> data) {
    std::vector<std::uint8_t> out(data.size());
    if (data.empty()) {
        return out;
    }
    Trivium t(key.bytes(), iv.bytes());
    t.apply(data, out);
    return out;
}

EncryptedPage CipherEngine::encrypt_page(Ppa ppa, std::span<const std::uint8_t> plaintext) {
    EncryptedPage page;
    page.iv = ivs_.next_iv(ppa);
    page.ciphertext = xor_stream(key_, page.iv, plaintext);
    page.latency_ns = timing_.latency_ns(plaintext.size());
    return page;
}

} // namespace ssdtee::cipher
