#include <cmath>

#include <gtest/gtest.h>

#include "optexec/error.hpp"
#include "optexec/models.hpp"
#include "oracles.hpp"

using namespace optexec;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::domain;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Step, BenchmarkExample) {
    const MarketState s{100.0, 100.0, 0.0, 0};
    const auto n = step(Benchmark{0.1, 1.0}, s, 10.0, 0.0, 0.0);
    EXPECT_NEAR(n.price, 101.0, 1e-12);
    EXPECT_EQ(n.time_index, 1);
}

TEST(Step, Ar1Example) {
    const MarketState s{100.0, 100.0, 2.0, 0};
    const auto n = step(Ar1Extra{0.1, 0.5, 0.9, 1.0, 1.0}, s, 0.0, 0.0, 0.0);
    EXPECT_NEAR(n.aux, 1.8, 1e-12);
    EXPECT_NEAR(n.price, 100.9, 1e-12);
}

TEST(Step, SpreadSharesAr1Dynamics) {
    const MarketState s{50.0, 50.0, -1.0, 3};
    Spread sp;
    static_cast<Ar1Extra&>(sp) = Ar1Extra{0.2, 0.3, 0.4, 0.5, 0.6};
    const auto a = step(sp, s, 2.0, 0.7, -0.2);
    const auto b = step(Ar1Extra{0.2, 0.3, 0.4, 0.5, 0.6}, s, 2.0, 0.7, -0.2);
    EXPECT_EQ(a.price, b.price);
    EXPECT_EQ(a.aux, b.aux);
    EXPECT_EQ(model_tag(ModelParams{sp}), "spread");
}

TEST(Step, LinearPercentageExample) {
    const MarketState s{100.0, 100.0, 0.0, 0};
    const LinearPercentage m{0.0, 0.1, 0.001, 0.0, 0.5, 1.0};
    const auto n = step(m, s, 10.0, 0.0, 0.0);  // B = mu_B + sigma_B * 0 = 0
    EXPECT_NEAR(n.no_impact_price, 100.0, 1e-12);
    EXPECT_NEAR(n.price - n.no_impact_price, 1.0, 1e-12);
    EXPECT_NEAR(n.price, 101.0, 1e-12);
}

TEST(Step, LinearPercentageNoImpactPricePositive) {
    oracle::Gen g(3);
    const LinearPercentage m{-0.5, 2.0, 0.001, 0.1, 0.5, 1.0};
    MarketState s{100.0, 100.0, 0.0, 0};
    for (int i = 0; i < 1000; ++i) {
        s = step(m, s, 0.0, g.normal(), g.normal());
        ASSERT_GT(s.no_impact_price, 0.0);
    }
}

TEST(Step, LiquidityLawAndViolation) {
    const Liquidity m = make_liquidity(0.01, 0.05, 0.02, 0.5, 0.5, 10.0);
    const MarketState s{100.0, 100.0, 50.0, 0};
    const auto n = step(m, s, 5.0, 0.2, 0.1);  // O' = 25 + 1 = 26
    EXPECT_NEAR(n.aux, 26.0, 1e-12);
    const double want = 1.01 * 100.0 + 0.05 * 5.0 * 100.0 - 0.02 * (26.0 - 5.0) * 100.0 + 0.5 * 0.2;
    EXPECT_NEAR(n.price, want, 1e-10);
    EXPECT_EQ(kind_of([&] { step(m, s, 30.0, 0.0, 0.0); }), ErrorKind::liquidity_violation);
}

TEST(Step, LiquidityVolumeClampRecorded) {
    const Liquidity m = make_liquidity(0.0, 0.05, 0.02, 0.5, 0.5, 10.0);
    StepDiagnostics d;
    const auto n = step(m, MarketState{100.0, 100.0, 10.0, 0}, 0.0, 0.0, -5.0, &d);
    EXPECT_TRUE(d.volume_clamped);
    EXPECT_EQ(n.aux, 0.0);
}

TEST(Step, IdentityWithoutTradeOrNoise) {
    const MarketState s{123.0, 123.0, 0.0, 0};
    EXPECT_EQ(step(Benchmark{1.0, 1.0}, s, 0.0, 0.0, 0.0).price, 123.0);
    EXPECT_EQ(step(Ar1Extra{1.0, 0.5, 0.5, 1.0, 1.0}, s, 0.0, 0.0, 0.0).price, 123.0);
}

TEST(Step, PureFunction) {
    const ModelParams p = Ar1Extra{0.3, 0.2, 0.7, 1.1, 0.9};
    const MarketState s{99.0, 99.0, 0.4, 2};
    const auto a = step(p, s, 1.5, 0.123, -0.456);
    const auto b = step(p, s, 1.5, 0.123, -0.456);
    EXPECT_EQ(a.price, b.price);
    EXPECT_EQ(a.aux, b.aux);
}

TEST(Step, NegativeTradeRejected) {
    EXPECT_EQ(kind_of([] { step(Benchmark{1.0, 1.0}, MarketState{}, -1.0, 0.0, 0.0); }), ErrorKind::validation);
}

TEST(Models, LiquidityBetaIsThetaPlusGamma) {
    const Liquidity m = make_liquidity(0.0, 0.37, 0.11, 0.2, 1.0, 1.0);
    EXPECT_EQ(m.beta, 0.37 + 0.11);
}

TEST(Models, ValidationNamesField) {
    EXPECT_NE(message_of([] { validate(ModelParams{Ar1Extra{1.0, 0.5, 1.5, 1.0, 1.0}}); }).find("model.rho"),
              std::string::npos);
    EXPECT_NE(message_of([] { validate(ModelParams{Benchmark{-1.0, 1.0}}); }).find("model.theta"), std::string::npos);
    EXPECT_NE(message_of([] { validate(ModelParams{Benchmark{1.0, 0.0}}); }).find("model.sigma_eps"),
              std::string::npos);
    EXPECT_EQ(kind_of([] { validate(ModelParams{LinearPercentage{0.0, -0.1, 0.1, 0.0, 0.0, 1.0}}); }),
              ErrorKind::validation);
}

TEST(Convexity, Examples) {
    EXPECT_TRUE(convexity_check(Benchmark{1.0, 1.0}));
    EXPECT_FALSE(convexity_check(Benchmark{0.75, 1.0}));
    EXPECT_FALSE(convexity_check(Benchmark{0.1, 1.0}));
    EXPECT_EQ(kind_of([] { convexity_check(Ar1Extra{1.0, 0.5, 0.5, 1.0, 1.0}); }), ErrorKind::unsupported_regime);
}

TEST(LinearGaussianView, Coefficients) {
    const auto lg = linear_gaussian(Ar1Extra{0.8, 0.5, 0.6, 1.0, 0.7}, 0.4);
    EXPECT_DOUBLE_EQ(lg.alpha, 0.5 * 0.6 * 0.4);
    EXPECT_DOUBLE_EQ(lg.beta, std::sqrt(0.25 * 0.49 + 1.0));
    const auto b = linear_gaussian(Benchmark{2.0, 3.0}, 5.0);
    EXPECT_EQ(b.alpha, 0.0);
    EXPECT_EQ(b.beta, 3.0);
    EXPECT_FALSE(is_linear_gaussian(Liquidity{}));
}
