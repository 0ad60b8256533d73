#include "ssdtee/cipher/trivium.hpp"

#include <algorithm>

namespace ssdtee::cipher {

namespace {

// State bit i (1-based, i <= 80) of a key or IV.
std::uint8_t bit80(const Block80& b, int i) {
    const int k = i - 1;
    return static_cast<std::uint8_t>((b[9 - k / 8] >> (7 - k % 8)) & 1U);
}

} // namespace

ReferenceTrivium::ReferenceTrivium(const Block80& key, const Block80& iv) {
    for (int i = 1; i <= 80; ++i) {
        s_[i] = bit80(key, i);
        s_[93 + i] = bit80(iv, i);
    }
    s_[286] = s_[287] = s_[288] = 1;
    for (int i = 0; i < Trivium::kWarmupSteps; ++i) {
        next_bit();
    }
}

std::uint8_t ReferenceTrivium::next_bit() {
    std::uint8_t t1 = s_[66] ^ s_[93];
    std::uint8_t t2 = s_[162] ^ s_[177];
    std::uint8_t t3 = s_[243] ^ s_[288];
    const std::uint8_t z = t1 ^ t2 ^ t3;
    t1 ^= (s_[91] & s_[92]) ^ s_[171];
    t2 ^= (s_[175] & s_[176]) ^ s_[264];
    t3 ^= (s_[286] & s_[287]) ^ s_[69];
    std::copy_backward(s_.begin() + 1, s_.begin() + 93, s_.begin() + 94);
    s_[1] = t3;
    std::copy_backward(s_.begin() + 94, s_.begin() + 177, s_.begin() + 178);
    s_[94] = t1;
    std::copy_backward(s_.begin() + 178, s_.begin() + 288, s_.begin() + 289);
    s_[178] = t2;
    return z;
}

void ReferenceTrivium::generate(std::span<std::uint8_t> out) {
    for (auto& byte : out) {
        std::uint8_t v = 0;
        for (int b = 0; b < 8; ++b) {
            v |= static_cast<std::uint8_t>(next_bit() << b);
        }
        byte = v;
    }
}

namespace {

constexpr int kNa = 93;
constexpr int kNb = 84;
constexpr int kNc = 111;

template <int N>
inline std::uint64_t tap(unsigned __int128 r, int p) {
    return static_cast<std::uint64_t>(r >> (N - p));
}

} // namespace

Trivium::Trivium(const Block80& key, const Block80& iv) {
    for (int i = 1; i <= 80; ++i) {
        a_ |= static_cast<u128>(bit80(key, i)) << (kNa - i);
        b_ |= static_cast<u128>(bit80(iv, i)) << (kNb - i);
    }
    c_ |= static_cast<u128>(7U); // positions 109..111
    for (int i = 0; i < kWarmupSteps / 64; ++i) {
        next_word();
    }
}

std::uint64_t Trivium::next_word() {
    const std::uint64_t a66 = tap<kNa>(a_, 66), a69 = tap<kNa>(a_, 69), a91 = tap<kNa>(a_, 91),
                        a92 = tap<kNa>(a_, 92), a93 = tap<kNa>(a_, 93);
    const std::uint64_t b69 = tap<kNb>(b_, 69), b78 = tap<kNb>(b_, 78), b82 = tap<kNb>(b_, 82),
                        b83 = tap<kNb>(b_, 83), b84 = tap<kNb>(b_, 84);
    const std::uint64_t c66 = tap<kNc>(c_, 66), c87 = tap<kNc>(c_, 87), c109 = tap<kNc>(c_, 109),
                        c110 = tap<kNc>(c_, 110), c111 = tap<kNc>(c_, 111);

    std::uint64_t t1 = a66 ^ a93;
    std::uint64_t t2 = b69 ^ b84;
    std::uint64_t t3 = c66 ^ c111;
    const std::uint64_t z = t1 ^ t2 ^ t3;
    t1 ^= (a91 & a92) ^ b78;
    t2 ^= (b82 & b83) ^ c87;
    t3 ^= (c109 & c110) ^ a69;

    constexpr u128 mask_a = (static_cast<u128>(1) << kNa) - 1;
    constexpr u128 mask_b = (static_cast<u128>(1) << kNb) - 1;
    constexpr u128 mask_c = (static_cast<u128>(1) << kNc) - 1;
    a_ = ((a_ >> 64) | (static_cast<u128>(t3) << (kNa - 64))) & mask_a;
    b_ = ((b_ >> 64) | (static_cast<u128>(t1) << (kNb - 64))) & mask_b;
    c_ = ((c_ >> 64) | (static_cast<u128>(t2) << (kNc - 64))) & mask_c;
    return z;
}

void Trivium::generate(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size() && pending_bytes_ > 0) {
        out[i++] = static_cast<std::uint8_t>(pending_);
        pending_ >>= 8;
        --pending_bytes_;
    }
    for (; i + 8 <= out.size(); i += 8) {
        std::uint64_t w = next_word();
        for (int b = 0; b < 8; ++b) {
            out[i + b] = static_cast<std::uint8_t>(w >> (8 * b));
        }
    }
    if (i < out.size()) {
        pending_ = next_word();
        pending_bytes_ = 8;
        while (i < out.size()) {
            out[i++] = static_cast<std::uint8_t>(pending_);
            pending_ >>= 8;
            --pending_bytes_;
        }
    }
}

void Trivium::apply(std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
    std::array<std::uint8_t, 512> buf{};
    std::size_t done = 0;
    while (done < in.size()) {
        const std::size_t n = std::min(buf.size(), in.size() - done);
        generate(std::span(buf.data(), n));
        for (std::size_t i = 0; i < n; ++i) {
            out[done + i] = in[done + i] ^ buf[i];
        }
        done += n;
    }
}

std::vector<std::uint8_t> keystream(const Block80& key, const Block80& iv, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    Trivium t(key, iv);
    t.generate(out);
    return out;
}

} // namespace ssdtee::cipher
