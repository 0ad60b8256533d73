#pragma once

#include "ssdtee/cipher/trivium.hpp"
#include "ssdtee/sim/rng.hpp"
#include "ssdtee/types.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ssdtee::cipher {

/// 80-bit symmetric key held in the secure-register model. Deliberately has
/// no stream or string conversion so it cannot leak into reports or traces.
class CipherKey {
public:
    explicit CipherKey(const Block80& bytes) : bytes_(bytes) {}
    /// Key derived from a seed, for simulated TEE sessions.
    static CipherKey derive(std::uint64_t seed);

    [[nodiscard]] const Block80& bytes() const noexcept { return bytes_; }

private:
    Block80 bytes_;
};

/// IV = spatial bits (PPA) concatenated with temporal bits (PRNG draw), the
/// PPA occupying the high part of the 80-bit value.
struct CipherIv {
    std::uint64_t ppa_bits = 0;
    std::uint64_t prng_bits = 0;
    unsigned temporal_width = 40;

    /// Little-endian byte image of the 80-bit value.
    [[nodiscard]] Block80 bytes() const noexcept;
    friend bool operator==(const CipherIv&, const CipherIv&) = default;
};

struct IvConfig {
    unsigned spatial_bits = 40;
    unsigned temporal_bits = 40;
    /// Redraws allowed on collision before giving up.
    unsigned max_redraws = 64;
};

/// Issues IVs and keeps the per-epoch uniqueness ledger. The epoch rolls per
/// TEE session, which clears the ledger and reseeds the PRNG stream.
class IvGenerator {
public:
    explicit IvGenerator(std::uint64_t seed, IvConfig config = {});

    /// Throws std::out_of_range if the PPA does not fit the spatial field and
    /// IvSpaceExhausted if no unused IV remains for this PPA in the epoch.
    CipherIv next_iv(Ppa ppa);
    void roll_epoch();

    [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }
    [[nodiscard]] std::uint64_t issued_in_epoch() const noexcept { return ledger_.size(); }
    [[nodiscard]] bool issued(const CipherIv& iv) const;
    [[nodiscard]] const IvConfig& config() const noexcept { return config_; }

private:
    struct Entry {
        std::uint64_t ppa;
        std::uint64_t prng;
        friend bool operator==(const Entry&, const Entry&) = default;
    };
    struct EntryHash {
        std::size_t operator()(const Entry& e) const noexcept { return sim::Rng::mix(e.ppa * 0x100000001b3ULL ^ e.prng); }
    };

    std::uint64_t seed_;
    IvConfig config_;
    std::uint64_t epoch_ = 0;
    sim::Rng rng_;
    std::unordered_set<Entry, EntryHash> ledger_;
    std::unordered_map<std::uint64_t, std::uint64_t> per_ppa_;
};

/// Keystream throughput model: ceil(page_bits / bits_per_cycle) cycles at
/// engine_clock_hz.
struct CipherTiming {
    std::uint32_t bits_per_cycle = 64;
    std::uint64_t engine_clock_hz = 1'600'000'000;

    [[nodiscard]] std::uint64_t cycles(std::uint64_t bytes) const noexcept { return ceil_div(bytes * 8, bits_per_cycle); }
    [[nodiscard]] Duration latency_ns(std::uint64_t bytes) const noexcept {
        return ceil_div(cycles(bytes) * 1'000'000'000ULL, engine_clock_hz);
    }
    void validate() const;
};

struct EncryptedPage {
    std::vector<std::uint8_t> ciphertext;
    CipherIv iv;
    Duration latency_ns = 0;
};

/// XOR of `data` with the keystream for (key, iv).
[[nodiscard]] std::vector<std::uint8_t> xor_stream(const CipherKey& key, const CipherIv& iv,
                                                   std::span<const std::uint8_t> data);

/// The flash-to-DRAM cipher datapath.
class CipherEngine {
public:
    CipherEngine(CipherKey key, IvGenerator& ivs, CipherTiming timing = {})
        : key_(std::move(key)), ivs_(ivs), timing_(timing) {}

    EncryptedPage encrypt_page(Ppa ppa, std::span<const std::uint8_t> plaintext);
    [[nodiscard]] std::vector<std::uint8_t> decrypt_page(const CipherIv& iv, std::span<const std::uint8_t> ciphertext) const {
        return xor_stream(key_, iv, ciphertext);
    }

    [[nodiscard]] const CipherTiming& timing() const noexcept { return timing_; }

private:
    CipherKey key_;
    IvGenerator& ivs_;
    CipherTiming timing_;
};

} // namespace ssdtee::cipher
