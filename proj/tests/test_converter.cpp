#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "rbc/converter.hpp"
#include "rbc/random.hpp"

using rbc::BinaryConverter;
using rbc::BitString;
using rbc::TokenDistribution;
using rbc::TokenId;

TEST(Converter, WidthFromVocabulary) {
    EXPECT_EQ(BinaryConverter::random(4, 1).bits_per_token(), 2u);
    EXPECT_EQ(BinaryConverter::random(5, 1).bits_per_token(), 3u);
    EXPECT_EQ(BinaryConverter::random(64, 1).bits_per_token(), 6u);
    EXPECT_EQ(BinaryConverter::random(50257, 1).bits_per_token(), 16u);
    EXPECT_THROW(BinaryConverter::random(1, 1), rbc::InvalidArgument);
}

TEST(Converter, FullVocabularyIsPermutation) {
    const auto c = BinaryConverter::random(4, 77);
    std::set<std::uint32_t> codes;
    for (TokenId t = 0; t < 4; ++t) codes.insert(c.code(t));
    EXPECT_EQ(codes, (std::set<std::uint32_t>{0, 1, 2, 3}));
}

TEST(Converter, PartialVocabularyInjective) {
    const auto c = BinaryConverter::random(5, 3);
    std::set<std::uint32_t> codes;
    for (TokenId t = 0; t < 5; ++t) {
        EXPECT_LT(c.code(t), 8u);
        codes.insert(c.code(t));
    }
    EXPECT_EQ(codes.size(), 5u);
}

TEST(Converter, DeterministicPerSeed) {
    const auto a = BinaryConverter::random(1000, 9), b = BinaryConverter::random(1000, 9);
    const auto c = BinaryConverter::random(1000, 10);
    bool differs = false;
    for (TokenId t = 0; t < 1000; ++t) {
        EXPECT_EQ(a.code(t), b.code(t));
        differs |= a.code(t) != c.code(t);
    }
    EXPECT_TRUE(differs);
}

TEST(Converter, ConvertIdentityEnumeration) {
    const auto c = BinaryConverter::identity(4);
    EXPECT_TRUE(c.convert(std::vector<TokenId>{}).empty());
    EXPECT_EQ(c.convert(std::vector<TokenId>{2}).str(), "10");
    EXPECT_EQ(c.convert(std::vector<TokenId>{1, 3}).str(), "0111");
    EXPECT_THROW(c.convert(std::vector<TokenId>{4}), rbc::InvalidArgument);
}

TEST(Converter, RoundTrip) {
    const auto c = BinaryConverter::random(300, 5);
    std::vector<TokenId> toks;
    rbc::UniformStream s(1);
    for (int i = 0; i < 1000; ++i) toks.push_back(static_cast<TokenId>(s.next_below(300)));
    EXPECT_EQ(c.unconvert(c.convert(toks)), toks);
    EXPECT_TRUE(c.unconvert(BitString{}).empty());
    EXPECT_THROW(c.unconvert(BitString::parse("1")), rbc::InvalidArgument);
}

TEST(Converter, OutOfImageFallback) {
    const auto c = BinaryConverter::identity(3);  // 00, 01, 10
    EXPECT_EQ(c.unconvert(BitString::parse("11")), std::vector<TokenId>{0});
    // Fallback indexes the tokens in ascending code order, not by token id.
    const auto d = BinaryConverter::from_codes({2, 0, 1});  // token 1 has the smallest code
    EXPECT_EQ(d.token_for_code(3), 1u);
    EXPECT_EQ(d.token_for_code(2), 0u);
    EXPECT_THROW(BinaryConverter::from_codes({1, 1}), rbc::InvalidArgument);
}

TEST(Converter, NextBitProbExamples) {
    const auto c = BinaryConverter::identity(4);
    const TokenDistribution d({0.1, 0.2, 0.3, 0.4});
    EXPECT_NEAR(c.next_bit_prob(d, BitString{}), 0.7, 1e-15);
    EXPECT_NEAR(c.next_bit_prob(d, BitString::parse("1")), 0.4 / 0.7, 1e-15);
    EXPECT_NEAR(c.next_bit_prob(d, BitString::parse("0")), 0.2 / 0.3, 1e-15);
    EXPECT_EQ(c.next_bit_prob(TokenDistribution::point_mass(4, 0), BitString{}), 0.0);
    EXPECT_THROW(c.next_bit_prob(TokenDistribution::point_mass(4, 0), BitString::parse("1")),
                 rbc::DegeneratePrefix);
    EXPECT_THROW(c.next_bit_prob(d, BitString::parse("01")), rbc::InvalidArgument);
}

// Enumerate every l-bit path: the product of per-bit probabilities must
// reproduce the token distribution.
TEST(Converter, ChainRuleByPathEnumeration) {
    for (std::size_t vocab : {2u, 3u, 5u, 16u, 37u, 64u}) {
        const auto c = BinaryConverter::random(vocab, vocab * 13);
        rbc::UniformStream s(vocab);
        std::vector<double> p(vocab);
        for (auto& x : p) x = s.next_unit();
        p[0] = 0.0;  // a zero-mass token must not break the recursion
        double total = 0.0;
        for (double x : p) total += x;
        for (auto& x : p) x /= total;
        const TokenDistribution dist(p);
        std::vector<double> reached(vocab, 0.0);
        const std::size_t l = c.bits_per_token();
        std::function<void(BitString, double)> walk = [&](BitString prefix, double mass) {
            if (mass == 0.0) return;
            if (prefix.size() == l) {
                reached[c.token_for_code(static_cast<std::uint32_t>(prefix.to_uint(0, l)))] += mass;
                return;
            }
            const double q = c.next_bit_prob(dist, prefix);
            auto zero = prefix, one = prefix;
            zero.push_back(0);
            one.push_back(1);
            walk(zero, mass * (1.0 - q));
            walk(one, mass * q);
        };
        walk(BitString{}, 1.0);
        for (std::size_t t = 0; t < vocab; ++t) EXPECT_NEAR(reached[t], dist[static_cast<TokenId>(t)], 1e-12);
    }
}

TEST(Converter, PermutingOutsidePrefixDoesNotMatter) {
    const auto c = BinaryConverter::identity(8);
    std::vector<double> p{0.05, 0.1, 0.15, 0.2, 0.1, 0.1, 0.2, 0.1};
    const double q = c.next_bit_prob(TokenDistribution(p), BitString::parse("0"));
    std::swap(p[4], p[7]);
    std::swap(p[5], p[6]);
    EXPECT_DOUBLE_EQ(c.next_bit_prob(TokenDistribution(p), BitString::parse("0")), q);
}

TEST(TokenDistributionTest, ValidatesAndRenormalizes) {
    EXPECT_THROW(TokenDistribution({0.5, 0.6}), rbc::InvalidArgument);
    EXPECT_THROW(TokenDistribution({-0.1, 1.1}), rbc::InvalidArgument);
    EXPECT_THROW(TokenDistribution({std::nan(""), 1.0}), rbc::InvalidArgument);
    const TokenDistribution d({0.5000000004, 0.5}, 1e-3);
    EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
    const auto u = TokenDistribution::uniform(4);
    EXPECT_DOUBLE_EQ(u[3], 0.25);
}

TEST(Converter, JsonSidecarRederives) {
    const auto c = BinaryConverter::random(100, 42);
    const auto j = c.to_json();
    EXPECT_EQ(j["version"], 1);
    const auto d = BinaryConverter::from_json(j);
    for (TokenId t = 0; t < 100; ++t) EXPECT_EQ(c.code(t), d.code(t));
    auto bad = j;
    bad["version"] = 2;
    EXPECT_THROW(BinaryConverter::from_json(bad), rbc::InvalidArgument);
}
