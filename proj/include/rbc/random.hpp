#pragma once

#include <cstdint>

#include "rbc/bits.hpp"

namespace rbc {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed for a named sub-stream (cell index, document index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
}

// Counter-based generator: draw i of stream (seed, stream) is a pure function of
// (seed, stream, i), so any position of a generation session can be replayed.
class UniformStream {
public:
    constexpr UniformStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(derive_seed(seed, stream)) {}

    constexpr std::uint64_t next_u64() noexcept {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    // Uniform on (0,1): 53-bit grid shifted by half a step. Never returns 0, which
    // keeps u <= q from selecting a zero-mass bit when q == 0.
    constexpr double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on [0, bound) by Lemire's multiply-shift with rejection.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        for (;;) {
            const std::uint64_t x = next_u64();
            const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
            const auto low = static_cast<std::uint64_t>(m);
            if (low >= bound || low >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    Bit next_bit() noexcept { return static_cast<Bit>(next_u64() >> 63); }

    BitString next_bits(std::size_t n) {
        BitString out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = next_bit();
        return out;
    }

    constexpr std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rbc
