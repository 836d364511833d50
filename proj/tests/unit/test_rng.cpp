#include <waitflow/rng.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <set>

using namespace waitflow;

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
    EXPECT_EQ(derive_seed(1, "chain", 0), derive_seed(1, "chain", 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s : {1ULL, 2ULL}) {
        for (const char* stream : {"flow-sim", "wait-sim", "chain"}) {
            for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(s, stream, i));
        }
    }
    EXPECT_EQ(seen.size(), 24u);
}

TEST(Rng, NormalWithZeroSdIsExact) {
    Rng rng = make_rng(3, "t");
    EXPECT_EQ(draw_normal(rng, 30.0, 0.0), 30.0);
}

TEST(Rng, GammaUsesRate) {
    Rng rng = make_rng(5, "t");
    std::vector<double> x(200000);
    for (double& v : x) v = draw_gamma(rng, 7.0, 0.5);
    EXPECT_NEAR(oracle::mean(x), 14.0, 0.05);
    EXPECT_NEAR(oracle::variance(x), 28.0, 0.5);
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng = make_rng(9, "t");
    for (int n = 0; n < 10000; ++n) {
        const double u = draw_uniform(rng);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}
