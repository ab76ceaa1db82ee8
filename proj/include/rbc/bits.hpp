#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "rbc/errors.hpp"

namespace rbc {

using Bit = std::uint8_t;

// Ordered sequence of bits, one byte per bit. Blocks in this library are a few
// dozen bits at most, so indexing speed beats packing density here.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::size_t n, Bit fill = 0) : bits_(n, fill ? 1 : 0) {}
    BitString(std::initializer_list<int> bits) {
        bits_.reserve(bits.size());
        for (int b : bits) push_back(static_cast<Bit>(b));
    }

    // Parses "0110"; anything other than '0'/'1' is rejected.
    static BitString parse(std::string_view text) {
        BitString out;
        out.bits_.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1')
                throw InvalidArgument(std::string("bit string contains '") + c + "'");
            out.bits_.push_back(static_cast<Bit>(c - '0'));
        }
        return out;
    }

    // The low `width` bits of `value`, most significant first.
    static BitString from_uint(std::uint64_t value, std::size_t width) {
        BitString out(width);
        for (std::size_t i = 0; i < width; ++i)
            out.bits_[i] = static_cast<Bit>((value >> (width - 1 - i)) & 1u);
        return out;
    }

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }

    Bit operator[](std::size_t i) const noexcept { return bits_[i]; }
    Bit& operator[](std::size_t i) noexcept { return bits_[i]; }

    void push_back(Bit b) {
        if (b > 1) throw InvalidArgument("bit value must be 0 or 1");
        bits_.push_back(b);
    }
    void append(const BitString& other) {
        bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
    }
    void reserve(std::size_t n) { bits_.reserve(n); }
    void truncate(std::size_t n) {
        if (n < bits_.size()) bits_.resize(n);
    }

    BitString slice(std::size_t pos, std::size_t len) const {
        if (pos + len > bits_.size()) throw InvalidArgument("bit slice out of range");
        BitString out;
        out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(pos),
                         bits_.begin() + static_cast<std::ptrdiff_t>(pos + len));
        return out;
    }

    // Reads bits [pos, pos + width) as an unsigned integer, MSB first.
    std::uint64_t to_uint(std::size_t pos, std::size_t width) const {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v = (v << 1) | bits_[pos + i];
        return v;
    }

    std::string str() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
        return s;
    }

    const std::vector<Bit>& data() const noexcept { return bits_; }
    auto begin() const noexcept { return bits_.begin(); }
    auto end() const noexcept { return bits_.end(); }

    friend bool operator==(const BitString&, const BitString&) = default;

    friend BitString operator+(BitString a, const BitString& b) {
        a.append(b);
        return a;
    }

    friend BitString operator^(const BitString& a, const BitString& b) {
        if (a.size() != b.size()) throw InvalidArgument("xor of bit strings with different lengths");
        BitString out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out.bits_[i] = a.bits_[i] ^ b.bits_[i];
        return out;
    }

private:
    std::vector<Bit> bits_;
};

inline std::size_t hamming_distance(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) throw InvalidArgument("hamming distance of unequal lengths");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

}  // namespace rbc
