#include <gtest/gtest.h>

#include <set>

#include "oracles/bp_oracle.hpp"
#include "rbc/ecc.hpp"
#include "rbc/gf2.hpp"

using rbc::BitString;
using rbc::Code;
using rbc::LdpcCode;
using rbc::LdpcParams;
using rbc::OneToOneCode;

namespace {

std::vector<BitString> all_messages(std::size_t k) {
    std::vector<BitString> out;
    for (std::uint64_t m = 0; m < (1ULL << k); ++m) out.push_back(BitString::from_uint(m, k));
    return out;
}

oracle::Parity to_rows(const rbc::gf2::Matrix& h) {
    oracle::Parity rows(h.rows(), std::vector<int>(h.cols()));
    for (std::size_t r = 0; r < h.rows(); ++r)
        for (std::size_t c = 0; c < h.cols(); ++c) rows[r][c] = h.get(r, c);
    return rows;
}

}  // namespace

TEST(OneToOne, XorExamples) {
    const OneToOneCode c(BitString::parse("1010"));
    EXPECT_EQ(c.encode(BitString::parse("0110")).str(), "1100");
    EXPECT_EQ(c.n(), 4u);
    EXPECT_EQ(c.k(), 4u);
    EXPECT_EQ(c.t(), 0u);
    for (const auto& m : all_messages(4)) EXPECT_EQ(c.decode(c.encode(m)), m);
    const OneToOneCode zero(BitString::parse("0000"));
    for (const auto& m : all_messages(4)) EXPECT_EQ(zero.encode(m), m);
    EXPECT_THROW(c.encode(BitString::parse("01")), rbc::InvalidArgument);
}

TEST(OneToOne, DecodeIsIsometry) {
    const auto c = OneToOneCode::make(6, 3);
    for (const auto& a : all_messages(6))
        for (const auto& b : {BitString::parse("000000"), BitString::parse("101100")})
            EXPECT_EQ(rbc::hamming_distance(c.decode(a), c.decode(b)), rbc::hamming_distance(a, b));
    EXPECT_THROW(OneToOneCode::make(0, 1), rbc::InvalidArgument);
}

TEST(OneToOne, MaskFromSeedIsDeterministic) {
    EXPECT_EQ(OneToOneCode::make(16, 5).mask(), OneToOneCode::make(16, 5).mask());
    EXPECT_NE(OneToOneCode::make(64, 5).mask(), OneToOneCode::make(64, 6).mask());
}

TEST(Ldpc, DefaultShape) {
    const auto c = LdpcCode::make({});
    EXPECT_EQ(c.checks(), 9u);
    EXPECT_EQ(c.n(), 12u);
    EXPECT_EQ(c.k(), 12u - rbc::gf2::rank(c.constructed_parity()));
    EXPECT_EQ(c.k(), 5u);
    EXPECT_EQ(c.t(), 0u);
}

TEST(Ldpc, RegularBeforeAndAfterPermutation) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto c = LdpcCode::make({.n = 12, .d_v = 3, .d_c = 4, .seed = seed});
        for (const auto* h : {&c.constructed_parity(), &c.parity()}) {
            for (std::size_t r = 0; r < h->rows(); ++r) EXPECT_EQ(h->row_weight(r), 4u);
            for (std::size_t col = 0; col < h->cols(); ++col) EXPECT_EQ(h->col_weight(col), 3u);
        }
    }
}

TEST(Ldpc, GeneratorIsOrthogonalAndRankAddsUp) {
    for (LdpcParams p : {LdpcParams{}, LdpcParams{.n = 8, .d_v = 2, .d_c = 4, .seed = 1},
                         LdpcParams{.n = 10, .d_v = 3, .d_c = 5, .seed = 2},
                         LdpcParams{.n = 15, .d_v = 2, .d_c = 3, .seed = 3},
                         LdpcParams{.n = 14, .d_v = 3, .d_c = 7, .seed = 4},
                         LdpcParams{.n = 9, .d_v = 2, .d_c = 6, .seed = 5}}) {
        const auto c = LdpcCode::make(p);
        const auto prod = rbc::gf2::multiply(c.generator(), c.parity().transpose());
        EXPECT_EQ(rbc::gf2::rank(prod), 0u);
        EXPECT_EQ(rbc::gf2::rank(c.parity()) + c.k(), c.n());
        EXPECT_EQ(rbc::gf2::rank(c.generator()), c.k());
        EXPECT_EQ(c.checks(), p.n * p.d_v / p.d_c);
    }
}

TEST(Ldpc, EightBitCodeShape) {
    const auto c = LdpcCode::make({.n = 8, .d_v = 2, .d_c = 4, .seed = 0});
    EXPECT_EQ(c.checks(), 4u);
    EXPECT_EQ(c.k(), 8u - rbc::gf2::rank(c.constructed_parity()));
}

TEST(Ldpc, ValidatesParameters) {
    EXPECT_THROW(LdpcCode::make({.n = 12, .d_v = 4, .d_c = 3}), rbc::InvalidArgument);
    EXPECT_THROW(LdpcCode::make({.n = 10, .d_v = 3, .d_c = 4}), rbc::InvalidArgument);
    EXPECT_THROW(LdpcCode::make({.crossover = 0.5}), rbc::InvalidArgument);
    EXPECT_THROW(LdpcCode::make({.max_iterations = 0}), rbc::InvalidArgument);
}

TEST(Ldpc, DeterministicPerSeed) {
    EXPECT_EQ(LdpcCode::make({.seed = 9}).parity(), LdpcCode::make({.seed = 9}).parity());
}

TEST(Ldpc, EncodeLinearSystematicInjective) {
    const auto c = LdpcCode::make({});
    const auto msgs = all_messages(c.k());
    std::set<std::string> seen;
    for (const auto& m : msgs) {
        const auto cw = c.encode(m);
        EXPECT_TRUE(c.is_codeword(cw));
        EXPECT_TRUE(rbc::gf2::times_column(c.parity(), cw) == BitString(c.checks()));
        EXPECT_EQ(cw.slice(0, c.k()), m);
        seen.insert(cw.str());
    }
    EXPECT_EQ(seen.size(), msgs.size());
    EXPECT_EQ(c.encode(BitString(c.k())), BitString(c.n()));
    for (const auto& a : msgs)
        for (const auto& b : {msgs[3], msgs[17], msgs[30]})
            EXPECT_EQ(c.encode(a ^ b), c.encode(a) ^ c.encode(b));
    EXPECT_THROW(c.encode(BitString(3)), rbc::InvalidArgument);
}

TEST(Ldpc, NoiselessRoundTrip) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const auto c = LdpcCode::make({.seed = seed});
        for (const auto& m : all_messages(c.k())) {
            const auto r = c.decode_word(c.encode(m));
            EXPECT_TRUE(r.converged);
            EXPECT_EQ(r.iterations, 0u);
            EXPECT_EQ(c.decode(c.encode(m)), m);
        }
    }
}

TEST(Ldpc, DecoderIsTotal) {
    const auto c = LdpcCode::make({});
    for (std::uint64_t w = 0; w < 4096; ++w) {
        const auto r = c.decode_word(BitString::from_uint(w, 12));
        EXPECT_EQ(r.word.size(), 12u);
        EXPECT_EQ(c.decode(BitString::from_uint(w, 12)).size(), c.k());
        if (r.converged) {
            EXPECT_TRUE(c.is_codeword(r.word));
        }
    }
    EXPECT_THROW(c.decode(BitString(11)), rbc::InvalidArgument);
}

// Frozen from the probability-domain reference decoder: 224 of 384 (message,
// flip) pairs recover for the seed-0 code with crossover 0.35.
TEST(Ldpc, SingleFlipFractionMatchesOracle) {
    const auto c = LdpcCode::make({});
    std::size_t ok = 0, total = 0;
    for (const auto& m : all_messages(c.k()))
        for (std::size_t i = 0; i < c.n(); ++i) {
            auto rx = c.encode(m);
            rx[i] ^= 1;
            ok += c.decode(rx) == m;
            ++total;
        }
    EXPECT_EQ(total, 384u);
    EXPECT_EQ(ok, 224u);

    // Recompute with the reference decoder, with codewords found by brute force.
    const auto h = to_rows(c.parity());
    std::vector<oracle::Word> codewords;
    for (std::uint64_t w = 0; w < 4096; ++w) {
        oracle::Word word(12);
        for (int b = 0; b < 12; ++b) word[b] = (w >> (11 - b)) & 1;
        if (oracle::syndrome_zero(h, word)) codewords.push_back(word);
    }
    ASSERT_EQ(codewords.size(), 32u);
    const auto ref = oracle::single_flip_recovery(h, codewords, c.k(), 0.35, 50);
    EXPECT_EQ(ref.total, total);
    EXPECT_EQ(ref.recovered, ok);
}

// With a small decoder crossover the same graph corrects every single flip.
TEST(Ldpc, LowCrossoverCorrectsSingleFlips) {
    const auto c = LdpcCode::make({.crossover = 0.05});
    for (const auto& m : all_messages(c.k()))
        for (std::size_t i = 0; i < c.n(); ++i) {
            auto rx = c.encode(m);
            rx[i] ^= 1;
            EXPECT_EQ(c.decode(rx), m);
        }
}

// Exact recovery averaged over messages and all patterns of w flips.
TEST(Ldpc, MonotoneDegradation) {
    for (double p : {0.35, 0.05}) {
        const auto c = LdpcCode::make({.crossover = p});
        double previous = 1.1;
        for (std::size_t w = 0; w <= 3; ++w) {
            std::size_t ok = 0, total = 0;
            for (std::uint64_t e = 0; e < 4096; ++e) {
                if (static_cast<std::size_t>(__builtin_popcountll(e)) != w) continue;
                const auto err = BitString::from_uint(e, 12);
                for (const auto& m : all_messages(c.k())) {
                    ok += c.decode(c.encode(m) ^ err) == m;
                    ++total;
                }
            }
            const double rate = static_cast<double>(ok) / static_cast<double>(total);
            EXPECT_LE(rate, previous) << "p=" << p << " flips=" << w;
            previous = rate;
        }
    }
}

TEST(CodeJson, RoundTripBothKinds) {
    const Code l = LdpcCode::make({.seed = 4, .crossover = 0.2});
    const Code back = Code::from_json(l.to_json());
    EXPECT_EQ(back.kind(), rbc::CodeKind::ldpc);
    EXPECT_EQ(back.k(), l.k());
    EXPECT_EQ(back.ldpc()->parity(), l.ldpc()->parity());
    EXPECT_DOUBLE_EQ(back.ldpc()->params().crossover, 0.2);
    auto tampered = l.to_json();
    tampered["k"] = 99;
    EXPECT_THROW(Code::from_json(tampered), rbc::InvalidArgument);

    const Code o = OneToOneCode::make(4, 8);
    const Code ob = Code::from_json(o.to_json());
    EXPECT_EQ(ob.one_to_one()->mask(), o.one_to_one()->mask());
    EXPECT_THROW(Code::from_json({{"kind", "bch"}}), rbc::InvalidArgument);
}
