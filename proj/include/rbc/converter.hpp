#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbc/bits.hpp"
#include "rbc/errors.hpp"
#include "rbc/random.hpp"

namespace rbc {

using TokenId = std::uint32_t;

// Next-token distribution over the full vocabulary.
class TokenDistribution {
public:
    TokenDistribution() = default;

    // Rejects negative or non-finite entries and sums off by more than `tolerance`,
    // then renormalizes.
    explicit TokenDistribution(std::vector<double> probs, double tolerance = 1e-9)
        : probs_(std::move(probs)) {
        if (probs_.empty()) throw InvalidArgument("empty token distribution");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw InvalidArgument("token distribution has a negative or non-finite entry");
            sum += p;
        }
        if (!(std::fabs(sum - 1.0) <= tolerance))
            throw InvalidArgument("token distribution sums to " + std::to_string(sum));
        for (double& p : probs_) p /= sum;
    }

    static TokenDistribution point_mass(std::size_t vocab_size, TokenId token) {
        std::vector<double> p(vocab_size, 0.0);
        p.at(token) = 1.0;
        return TokenDistribution(std::move(p));
    }

    static TokenDistribution uniform(std::size_t vocab_size) {
        return TokenDistribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](TokenId t) const noexcept { return probs_[t]; }
    std::span<const double> probs() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

inline std::size_t bits_for_vocab(std::size_t vocab_size) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < vocab_size) ++bits;
    return bits;
}

// Injective map between token ids [0, |V|) and l-bit codes, l = ceil(log2 |V|).
// Immutable after construction.
class BinaryConverter {
public:
    // Seeded uniform-random injection of the vocabulary into {0,1}^l.
    static BinaryConverter random(std::size_t vocab_size, std::uint64_t seed) {
        check_vocab(vocab_size);
        const std::size_t width = bits_for_vocab(vocab_size);
        std::vector<std::uint32_t> all(std::size_t{1} << width);
        std::iota(all.begin(), all.end(), 0u);
        // Partial Fisher-Yates: only the first |V| slots are needed.
        UniformStream rng(seed, 0x636f6e76ULL);
        for (std::size_t i = 0; i < vocab_size; ++i) {
            const std::size_t j = i + rng.next_below(all.size() - i);
            std::swap(all[i], all[j]);
        }
        all.resize(vocab_size);
        BinaryConverter c(std::move(all), width);
        c.seed_ = seed;
        return c;
    }

    // Token x maps to the binary representation of x.
    static BinaryConverter identity(std::size_t vocab_size) {
        check_vocab(vocab_size);
        std::vector<std::uint32_t> codes(vocab_size);
        std::iota(codes.begin(), codes.end(), 0u);
        return BinaryConverter(std::move(codes), bits_for_vocab(vocab_size));
    }

    // Explicit enumeration: codes[token] is the token's code.
    static BinaryConverter from_codes(std::vector<std::uint32_t> codes) {
        check_vocab(codes.size());
        const std::size_t width = bits_for_vocab(codes.size());
        return BinaryConverter(std::move(codes), width);
    }

    std::size_t vocab_size() const noexcept { return code_of_.size(); }
    std::size_t bits_per_token() const noexcept { return width_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::uint32_t code(TokenId token) const {
        if (token >= code_of_.size())
            throw InvalidArgument("token id " + std::to_string(token) + " outside vocabulary of size " +
                                  std::to_string(code_of_.size()));
        return code_of_[token];
    }

    BitString convert(std::span<const TokenId> tokens) const {
        BitString out;
        out.reserve(tokens.size() * width_);
        for (TokenId t : tokens) out.append(BitString::from_uint(code(t), width_));
        return out;
    }

    // Blocks outside the image map to the token at position (v mod |V|) of the
    // enumeration listed in ascending code order.
    TokenId token_for_code(std::uint32_t v) const noexcept {
        const auto it = std::lower_bound(sorted_codes_.begin(), sorted_codes_.end(), v);
        if (it != sorted_codes_.end() && *it == v)
            return sorted_tokens_[static_cast<std::size_t>(it - sorted_codes_.begin())];
        return sorted_tokens_[v % sorted_tokens_.size()];
    }

    std::vector<TokenId> unconvert(const BitString& bits) const {
        if (bits.size() % width_ != 0)
            throw InvalidArgument("bit length " + std::to_string(bits.size()) +
                                  " is not a multiple of " + std::to_string(width_));
        std::vector<TokenId> out;
        out.reserve(bits.size() / width_);
        for (std::size_t pos = 0; pos < bits.size(); pos += width_)
            out.push_back(token_for_code(static_cast<std::uint32_t>(bits.to_uint(pos, width_))));
        return out;
    }

    // P(next bit = 1 | token code starts with `prefix`) under `dist`. Codes with a
    // common prefix are contiguous once sorted, so each query is a range sum.
    double next_bit_prob(const TokenDistribution& dist, const BitString& prefix) const {
        if (prefix.size() >= width_) throw InvalidArgument("bit prefix as long as a whole token");
        if (dist.size() != vocab_size())
            throw InvalidArgument("distribution size does not match the vocabulary");
        const std::size_t rest = width_ - prefix.size();
        const std::uint32_t base = static_cast<std::uint32_t>(prefix.to_uint(0, prefix.size())) << rest;
        const std::uint32_t mid = base + (std::uint32_t{1} << (rest - 1));
        const std::uint32_t top = base + (std::uint32_t{1} << rest);
        const double zero_mass = range_mass(dist, base, mid);
        const double one_mass = range_mass(dist, mid, top);
        const double total = zero_mass + one_mass;
        if (!(total > 0.0)) throw DegeneratePrefix("no probability mass on bit prefix " + prefix.str());
        return one_mass / total;
    }

    nlohmann::json to_json() const {
        return {{"version", 1}, {"vocab_size", vocab_size()}, {"seed", seed_}};
    }

    // The enumeration is re-derived from (vocab_size, seed), never stored.
    static BinaryConverter from_json(const nlohmann::json& j) {
        if (j.value("version", 0) != 1) throw InvalidArgument("unsupported converter sidecar version");
        return random(j.at("vocab_size").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
    }

private:
    BinaryConverter(std::vector<std::uint32_t> codes, std::size_t width)
        : code_of_(std::move(codes)), width_(width) {
        if (width_ > 31) throw InvalidArgument("vocabulary too large");
        std::vector<TokenId> order(code_of_.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](TokenId a, TokenId b) { return code_of_[a] < code_of_[b]; });
        sorted_tokens_ = order;
        sorted_codes_.reserve(order.size());
        for (TokenId t : order) {
            if (code_of_[t] >> width_) throw InvalidArgument("code does not fit in the token width");
            if (!sorted_codes_.empty() && sorted_codes_.back() == code_of_[t])
                throw InvalidArgument("two tokens share a code");
            sorted_codes_.push_back(code_of_[t]);
        }
    }

    static void check_vocab(std::size_t vocab_size) {
        if (vocab_size < 2) throw InvalidArgument("vocabulary needs at least two tokens");
    }

    double range_mass(const TokenDistribution& dist, std::uint32_t lo, std::uint32_t hi) const {
        auto first = std::lower_bound(sorted_codes_.begin(), sorted_codes_.end(), lo);
        auto last = std::lower_bound(first, sorted_codes_.end(), hi);
        double mass = 0.0;
        for (auto it = first; it != last; ++it)
            mass += dist[sorted_tokens_[static_cast<std::size_t>(it - sorted_codes_.begin())]];
        return mass;
    }

    std::vector<std::uint32_t> code_of_;
    std::vector<std::uint32_t> sorted_codes_;
    std::vector<TokenId> sorted_tokens_;
    std::size_t width_ = 0;
    std::uint64_t seed_ = 0;
};

}  // namespace rbc
