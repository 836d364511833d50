#include <waitflow/error.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/rng.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <cmath>
#include <map>

using namespace waitflow;

namespace {

McmcConfig quick(std::uint64_t seed = 11) {
    McmcConfig c;
    c.chains = 4;
    c.warmup_iters = 1000;
    c.keep_iters = 4000;
    c.seed = seed;
    return c;
}

const std::vector<ParamSpec> kReal{{"x", Support::Real}};
const std::vector<ParamSpec> kPos{{"b", Support::Positive}};

} // namespace

TEST(Sample, StandardNormal) {
    const auto res = sample([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, kReal,
                            std::vector<double>{0.5}, quick());
    const auto col = res.draws.column("x");
    EXPECT_GE(res.diagnostics.ess[0], 2000.0);
    EXPECT_LT(std::abs(oracle::mean(col)), 0.05);
    EXPECT_NEAR(oracle::variance(col), 1.0, 0.05);
    for (const auto& chain : res.diagnostics.accept_rate) EXPECT_NEAR(chain[0], 0.44, 0.08);
}

TEST(Sample, GammaThroughLogTransform) {
    // Gamma(71, 500) density of the conjugate oracle.
    const auto target = [](std::span<const double> b) { return 70.0 * std::log(b[0]) - 500.0 * b[0]; };
    const auto res = sample(target, kPos, std::vector<double>{0.1}, quick());
    EXPECT_NEAR(res.draws.mean("b"), 0.142, 0.01 * 0.142);
}

TEST(Sample, JacobianExponential) {
    const auto target = [](std::span<const double> x) { return -x[0]; };
    McmcConfig c = quick(21);
    c.keep_iters = 8000;
    const auto res = sample(target, kPos, std::vector<double>{1.0}, c);
    // Exp(1) has sd 1; dropping the Jacobian would give an improper target.
    const double ess = res.diagnostics.ess[0];
    ASSERT_GE(ess, 1000.0);
    EXPECT_NEAR(res.draws.mean("b"), 1.0, 4.0 / std::sqrt(ess));
}

TEST(Sample, Determinism) {
    const auto target = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    McmcConfig c = quick(5);
    c.keep_iters = 500;
    const auto a = sample(target, kReal, std::vector<double>{0.0}, c);
    const auto b = sample(target, kReal, std::vector<double>{0.0}, c);
    EXPECT_EQ(a.draws, b.draws);
    c.parallel = false;
    const auto serial = sample(target, kReal, std::vector<double>{0.0}, c);
    EXPECT_EQ(a.draws, serial.draws);
    c.seed = 6;
    const auto d = sample(target, kReal, std::vector<double>{0.0}, c);
    EXPECT_NE(a.draws.column(0), d.draws.column(0));
}

TEST(Sample, JointProposal) {
    // Correlated bivariate normal, rho = 0.9.
    const auto target = [](std::span<const double> x) {
        const double r = 0.9;
        return -(x[0] * x[0] - 2 * r * x[0] * x[1] + x[1] * x[1]) / (2 * (1 - r * r));
    };
    McmcConfig c = quick(8);
    c.proposal = ProposalKind::Joint;
    c.warmup_iters = 3000;
    c.keep_iters = 10000;
    const std::vector<ParamSpec> p{{"x", Support::Real}, {"y", Support::Real}};
    const auto res = sample(target, p, std::vector<double>{0.0, 0.0}, c);
    const auto x = res.draws.column("x"), y = res.draws.column("y");
    double cov = 0.0;
    const double mx = oracle::mean(x), my = oracle::mean(y);
    for (std::size_t n = 0; n < x.size(); ++n) cov += (x[n] - mx) * (y[n] - my);
    cov /= static_cast<double>(x.size() - 1);
    EXPECT_NEAR(cov, 0.9, 0.08);
    EXPECT_NEAR(oracle::variance(x), 1.0, 0.1);
    for (const auto& chain : res.diagnostics.accept_rate) EXPECT_NEAR(chain[0], 0.234, 0.08);
    EXPECT_LT(res.diagnostics.max_rhat(), 1.05);
}

TEST(Sample, DetailedBalanceThreeStates) {
    // Piecewise-constant density on [0,3) with weights 0.2, 0.3, 0.5.
    const double w[3] = {0.2, 0.3, 0.5};
    const auto target = [&](std::span<const double> x) {
        if (!(x[0] >= 0.0 && x[0] < 3.0)) return -std::numeric_limits<double>::infinity();
        return std::log(w[static_cast<int>(x[0])]);
    };
    McmcConfig c = quick(13);
    c.chains = 1;
    c.keep_iters = 200000;
    const auto res = sample(target, kReal, std::vector<double>{1.5}, c);
    const auto x = res.draws.column(0);
    std::map<std::pair<int, int>, double> n;
    std::vector<double> visits(3, 0.0);
    for (std::size_t t = 0; t + 1 < x.size(); ++t) {
        n[{static_cast<int>(x[t]), static_cast<int>(x[t + 1])}] += 1.0;
        visits[static_cast<std::size_t>(x[t])] += 1.0;
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            const double ab = n[{a, b}], ba = n[{b, a}];
            ASSERT_GT(ab + ba, 100.0);
            EXPECT_LT(std::abs(ab - ba), 3.0 * std::sqrt(ab + ba)) << a << "<->" << b;
        }
    }
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(visits[static_cast<std::size_t>(s)] / static_cast<double>(x.size() - 1), w[s], 0.02);
}

TEST(Sample, RejectsNonFiniteInit) {
    const auto target = [](std::span<const double> x) { return x[0] > 0 ? 0.0 : -std::numeric_limits<double>::infinity(); };
    McmcConfig c = quick();
    c.init_jitter = 0.0;
    EXPECT_THROW(sample(target, kReal, std::vector<double>{-1.0}, c), SamplerError);
    EXPECT_THROW(sample(target, kPos, std::vector<double>{-1.0}, c), SamplerError);
    EXPECT_THROW(sample(target, kReal, std::vector<double>{1.0, 2.0}, c), SamplerError);
}

TEST(Sample, StepSizeCollapseIsReported) {
    // Finite only at the exact starting point: every proposal is rejected.
    const auto target = [](std::span<const double> x) { return x[0] == 1.0 ? 0.0 : -std::numeric_limits<double>::infinity(); };
    McmcConfig c = quick();
    c.init_jitter = 0.0;
    EXPECT_THROW(sample(target, kReal, std::vector<double>{1.0}, c), SamplerError);
}

TEST(Sample, DiagnosticsInvariants) {
    const auto res = sample([](std::span<const double> x) { return -0.5 * x[0] * x[0] - 0.5 * x[1] * x[1]; },
                            std::vector<ParamSpec>{{"a", Support::Real}, {"b", Support::Real}},
                            std::vector<double>{0.0, 0.0}, quick(3));
    for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_GE(res.diagnostics.rhat[c], 1.0 - 1e-3);
        EXPECT_LE(res.diagnostics.ess[c], static_cast<double>(res.draws.size()));
    }
    EXPECT_EQ(res.draws.size(), 16000u);
    EXPECT_EQ(res.draws.chain_ids(), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Sample, FewDrawsLeaveDiagnosticsUnset) {
    McmcConfig c = quick();
    c.keep_iters = 50;
    const auto res = sample([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, kReal,
                            std::vector<double>{0.0}, c);
    EXPECT_TRUE(std::isnan(res.diagnostics.rhat[0]));
    EXPECT_TRUE(std::isnan(res.diagnostics.ess[0]));
}

TEST(McmcConfig, Validation) {
    McmcConfig c;
    EXPECT_DOUBLE_EQ(c.resolved_target(), 0.44);
    c.proposal = ProposalKind::Joint;
    EXPECT_DOUBLE_EQ(c.resolved_target(), 0.234);
    c.chains = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = McmcConfig{};
    c.target_accept = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = McmcConfig{};
    c.thin = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Rhat, IidChainsNearOne) {
    Rng rng = make_rng(1, "t");
    std::vector<std::vector<double>> chains(4, std::vector<double>(5000));
    for (auto& ch : chains) for (double& v : ch) v = draw_normal(rng, 0.0, 1.0);
    const double r = split_rhat(chains);
    EXPECT_GE(r, 1.0 - 1e-3);
    EXPECT_LE(r, 1.02);
    for (double& v : chains[2]) v += 10.0;
    EXPECT_GT(split_rhat(chains), 1.5);
}

TEST(Rhat, Errors) {
    EXPECT_THROW(split_rhat(std::vector<std::vector<double>>{{1, 2, 3, 4}}), DataError);
    EXPECT_THROW(split_rhat(std::vector<std::vector<double>>{{1, 2}, {3, 4}}), DataError);
    EXPECT_THROW(effective_sample_size(std::vector<std::vector<double>>{}), DataError);
}

TEST(Ess, Ar1MatchesAnalytic) {
    Rng rng = make_rng(2, "t");
    const double rho = 0.9;
    const std::size_t n = 100000;
    std::vector<std::vector<double>> chains(1, std::vector<double>(n));
    double x = 0.0;
    for (double& v : chains[0]) {
        x = rho * x + draw_normal(rng, 0.0, std::sqrt(1 - rho * rho));
        v = x;
    }
    const double expected = static_cast<double>(n) * (1 - rho) / (1 + rho);
    EXPECT_NEAR(effective_sample_size(chains), expected, 0.25 * expected);
}

TEST(Ess, CappedAtDrawCount) {
    // Antithetic chain: negative autocorrelation would push ESS above n.
    std::vector<std::vector<double>> chains(1);
    for (int t = 0; t < 1000; ++t) chains[0].push_back(t % 2 ? 1.0 : -1.0);
    Rng rng = make_rng(4, "t");
    for (double& v : chains[0]) v += draw_normal(rng, 0.0, 0.1);
    EXPECT_LE(effective_sample_size(chains), 1000.0);
}

TEST(PosteriorDraws, AppendAndAccess) {
    PosteriorDraws d({"a", "b"});
    d.append(0, 0, std::vector<double>{1.0, 2.0});
    d.append(1, 0, std::vector<double>{3.0, 4.0});
    EXPECT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d.mean("b"), 3.0);
    EXPECT_EQ(d.by_chain(0), (std::vector<std::vector<double>>{{1.0}, {3.0}}));
    EXPECT_THROW(d.append(0, 1, std::vector<double>{1.0}), DataError);
    EXPECT_THROW(d.append(0, 1, std::vector<double>{1.0, NAN}), DataError);
    EXPECT_THROW(d.index("c"), DataError);
    EXPECT_FALSE(d.find("c").has_value());
}
