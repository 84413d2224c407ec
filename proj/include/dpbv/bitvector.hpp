// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace dpbv {

/// Fixed-length packed bit vector. Bits beyond size() are kept zero so that
/// whole-word XOR/popcount loops are exact.
class BitVector {
public:
    BitVector() = default;

    explicit BitVector(uint32_t n_bits)
        : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}

    uint32_t size() const noexcept { return n_bits_; }

    bool bit(uint32_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1ULL;
    }

    void set_bit(uint32_t i, bool value) {
        const uint64_t mask = 1ULL << (i & 63);
        if (value)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    uint32_t popcount() const noexcept {
        uint32_t total = 0;
        for (uint64_t w : words_) total += static_cast<uint32_t>(std::popcount(w));
        return total;
    }

    BitVector complemented() const {
        BitVector out(n_bits_);
        for (size_t i = 0; i < words_.size(); ++i) out.words_[i] = ~words_[i];
        out.clear_padding();
        return out;
    }

    const std::vector<uint64_t>& words() const noexcept { return words_; }

    bool operator==(const BitVector& other) const noexcept {
        return n_bits_ == other.n_bits_ && words_ == other.words_;
    }

    /// Little-endian byte serialization; bit i lives at byte i/8, bit i%8.
    std::vector<uint8_t> to_bytes() const {
        std::vector<uint8_t> out((n_bits_ + 7) / 8, 0);
        for (size_t j = 0; j < out.size(); ++j)
            out[j] = static_cast<uint8_t>(words_[j >> 3] >> (8 * (j & 7)));
        return out;
    }

    static BitVector from_bytes(uint32_t n_bits, const uint8_t* bytes, size_t n_bytes) {
        if (n_bytes < (n_bits + 7) / 8)
            throw std::invalid_argument("BitVector::from_bytes: buffer too small");
        BitVector out(n_bits);
        for (size_t j = 0; j < (n_bits + 7u) / 8u; ++j)
            out.words_[j >> 3] |= static_cast<uint64_t>(bytes[j]) << (8 * (j & 7));
        out.clear_padding();
        return out;
    }

private:
    void clear_padding() {
        const uint32_t rem = n_bits_ & 63;
        if (rem != 0 && !words_.empty()) words_.back() &= (~0ULL) >> (64 - rem);
    }

    uint32_t n_bits_ = 0;
    std::vector<uint64_t> words_;
};

/// Count of differing positions. Padding is zero on both sides, so plain
/// word-wise XOR+popcount is exact.
inline uint32_t hamming_distance(const BitVector& a, const BitVector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming_distance: length mismatch");
    const auto& wa = a.words();
    const auto& wb = b.words();
    uint32_t total = 0;
    for (size_t i = 0; i < wa.size(); ++i)
        total += static_cast<uint32_t>(std::popcount(wa[i] ^ wb[i]));
    return total;
}

}  // namespace dpbv
