#include <gtest/gtest.h>

#include <cmath>

#include "rbc/channel.hpp"
#include "rbc/random.hpp"

TEST(Cbsc, IndicatorExamples) {
    EXPECT_EQ(rbc::cbsc_sample(0.8, 1, 0.5), 1);
    EXPECT_EQ(rbc::cbsc_sample(0.8, 0, 0.5), 1);
    EXPECT_EQ(rbc::cbsc_sample(0.3, 0, 0.5), 0);
    // Ties count as ones, as the indicator is written with <=.
    EXPECT_EQ(rbc::cbsc_sample(0.25, 1, 0.5), 1);
    const auto d = rbc::cbsc_draw(0.3, 1, 0.5);
    EXPECT_EQ(d.b, 1);
    EXPECT_EQ(d.q, 0.3);
}

TEST(Cbsc, RejectsBadProbability) {
    EXPECT_THROW(rbc::cbsc_sample(-0.1, 0, 0.5), rbc::InvalidArgument);
    EXPECT_THROW(rbc::cbsc_sample(1.1, 0, 0.5), rbc::InvalidArgument);
    EXPECT_THROW(rbc::cbsc_sample(std::nan(""), 0, 0.5), rbc::InvalidArgument);
    EXPECT_THROW(rbc::match_prob(2.0), rbc::InvalidArgument);
}

TEST(Cbsc, DegenerateProbabilitiesAreDeterministic) {
    rbc::UniformStream s(4);
    for (int i = 0; i < 10000; ++i) {
        const double u = s.next_unit();
        for (rbc::Bit y : {0, 1}) {
            EXPECT_EQ(rbc::cbsc_sample(0.0, y, u), 0);
            EXPECT_EQ(rbc::cbsc_sample(1.0, y, u), 1);
            EXPECT_EQ(rbc::cbsc_sample(0.5, y, u), y);  // q = 1/2 copies Y
        }
        EXPECT_EQ(rbc::bernoulli_sample(0.0, u), 0);
        EXPECT_EQ(rbc::bernoulli_sample(1.0, u), 1);
    }
}

TEST(Cbsc, MatchProbClosedForm) {
    EXPECT_DOUBLE_EQ(rbc::match_prob(0.5), 1.0);
    EXPECT_DOUBLE_EQ(rbc::match_prob(1.0), 0.5);
    EXPECT_DOUBLE_EQ(rbc::match_prob(0.0), 0.5);
    EXPECT_NEAR(rbc::match_prob(0.8), 0.7, 1e-15);
    for (int i = 0; i <= 100; ++i) {
        const double q = i / 100.0;
        const double bracket = 0.5 * (std::min(2 * q, 1.0) + std::min(2 - 2 * q, 1.0));
        EXPECT_NEAR(rbc::match_prob(q), bracket, 1e-15);
        EXPECT_GE(rbc::match_prob(q), 0.5);
    }
}

// The exact probabilities over a fine grid of u: integrate the indicator.
TEST(Cbsc, ExactMarginalOnUGrid) {
    const int grid = 100000;
    for (int qi = 0; qi <= 10; ++qi) {
        const double q = qi / 10.0;
        long ones = 0, matches = 0;
        for (int i = 0; i < grid; ++i) {
            const double u = (i + 0.5) / grid;
            for (rbc::Bit y : {0, 1}) {
                const auto b = rbc::cbsc_sample(q, y, u);
                ones += b;
                matches += b == y;
            }
        }
        EXPECT_NEAR(static_cast<double>(ones) / (2.0 * grid), q, 1e-4);
        EXPECT_NEAR(static_cast<double>(matches) / (2.0 * grid), rbc::match_prob(q), 1e-4);
    }
}
