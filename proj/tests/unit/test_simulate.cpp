#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "optexec/error.hpp"
#include "optexec/simulate.hpp"
#include "optexec/solver.hpp"
#include "oracles.hpp"

using namespace optexec;

namespace {

SimConfig config(const ModelParams& m, int T, double shares, std::size_t paths, std::uint64_t seed = 1) {
    SimConfig c;
    c.model = m;
    c.horizon = {T, shares};
    c.n_paths = paths;
    c.seed = seed;
    c.initial_state = {100.0, 100.0, 0.0, 0};
    return c;
}

// Type-7 sample quantile.
double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (double(v.size()) - 1.0) * p;
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST(SimulatePath, ForcesTerminalTradeAndKeepsResiduals) {
    const auto c = config(Benchmark{0.1, 1.0}, 4, 100.0, 1);
    const auto p = simulate_path(c, trade_rule(make_schedule({10, 20, 30, 40}, 100.0)), 0);
    ASSERT_EQ(p.prices.size(), 5u);
    EXPECT_EQ(p.trades, (std::vector<double>{10, 20, 30, 40}));
    EXPECT_EQ(p.residuals, (std::vector<double>{100, 90, 70, 40}));
    EXPECT_EQ(p.status, PathStatus::ok);
}

TEST(SimulatePath, ClampsRuleOutput) {
    const auto c = config(Benchmark{0.1, 1.0}, 3, 10.0, 1);
    const TradeRule greedy = [](int, const MarketState&, double) { return 1e9; };
    const auto p = simulate_path(c, greedy, 0);
    EXPECT_EQ(p.trades, (std::vector<double>{10, 0, 0}));
    const TradeRule negative = [](int, const MarketState&, double) { return -5.0; };
    EXPECT_EQ(simulate_path(c, negative, 0).trades, (std::vector<double>{0, 0, 10}));
}

TEST(SimulatePath, LiquidityViolationExcluded) {
    auto c = config(make_liquidity(0.0, 0.01, 0.001, 0.5, 0.5, 5.0), 2, 40.0, 50);
    c.initial_state.aux = 10.0;
    const auto d = evaluate_policy(c, make_schedule({35, 5}, 40.0), Formulation::simple);
    EXPECT_EQ(d.excluded, 50u);
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_EQ(d.status[i], PathStatus::liquidity_violation);
        EXPECT_TRUE(std::isnan(d.shortfall[i]));
    }
    EXPECT_EQ(d.shortfall_summary.count, 0u);
}

TEST(Evaluate, NoNoiseGivesZeroSpread) {
    auto c = config(Benchmark{0.5, 1e-300}, 4, 8.0, 2000);
    const auto d = evaluate_policy(c, solve_benchmark_simple({0.5, 1.0}, c.horizon).schedule, Formulation::simple);
    EXPECT_EQ(d.shortfall_summary.std, 0.0);
    EXPECT_EQ(d.excluded, 0u);
}

TEST(Evaluate, ObjectiveMatchesValueFunction) {
    const Benchmark m{0.1, 1.0};
    const auto c = config(m, 4, 100.0, 1'000'000, 3);
    const auto sol = solve_benchmark_simple(m, c.horizon);
    const auto d = evaluate_policy(c, sol.schedule, Formulation::simple);
    EXPECT_LE(std::abs(d.objective - sol.value), 3.0 * d.objective_se)
        << d.objective << " +- " << d.objective_se << " vs " << sol.value;
}

TEST(Evaluate, ComplexObjectiveMatchesValueFunction) {
    const Benchmark m{1.0, 1.0};
    const auto c = config(m, 3, 2.0, 400'000, 5);
    const auto sol = solve_benchmark_complex(m, c.horizon);
    const auto d = evaluate_policy(c, sol.schedule, Formulation::complex);
    EXPECT_LE(std::abs(d.objective - sol.value), 3.0 * d.objective_se + 1e-6 * sol.value)
        << d.objective << " +- " << d.objective_se << " vs " << sol.value;
}

TEST(Evaluate, DeterministicAcrossThreadCounts) {
    auto c = config(Ar1Extra{1.0, 0.3, 0.5, 1.0, 1.0}, 5, 3.0, 20000, 42);
    const auto policy = solve(c.model, c.horizon, c.initial_state, Formulation::complex).policy;
    c.threads = 1;
    const auto a = evaluate_policy(c, policy, Formulation::complex);
    c.threads = 8;
    const auto b = evaluate_policy(c, policy, Formulation::complex);
    EXPECT_EQ(a.shortfall, b.shortfall);
    EXPECT_EQ(a.timing, b.timing);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.shortfall_summary.std, b.shortfall_summary.std);
}

TEST(Evaluate, ComplexTimingVanishesOnMonotonePaths) {
    const Benchmark m{5.0, 1e-3};
    const auto c = config(m, 5, 10.0, 5000);
    const auto d = evaluate_policy(c, solve_benchmark_complex(m, c.horizon).schedule, Formulation::complex);
    // Zero up to the rounding of the two sums.
    std::size_t zero = 0;
    for (double t : d.timing) zero += std::abs(t) <= 1e-12 * 100.0 * 10.0;
    EXPECT_GE(zero, std::size_t(0.99 * 5000));
}

TEST(Evaluate, IdentityOnEveryPath) {
    const auto c = config(Ar1Extra{0.8, 0.5, 0.6, 1.0, 0.7}, 4, 5.0, 3000);
    const auto d = evaluate_policy(c, make_schedule({1, 2, 1, 1}, 5.0), Formulation::simple);
    for (std::size_t i = 0; i < d.shortfall.size(); ++i) ASSERT_EQ(d.shortfall[i], d.impact[i] + d.timing[i]);
}

TEST(Evaluate, TwoSidedPathIsZeroSum) {
    const auto c = config(Benchmark{0.3, 1.0}, 4, 10.0, 200);
    const auto rule = trade_rule(make_schedule({3, 3, 2, 2}, 10.0));
    for (std::size_t i = 0; i < c.n_paths; ++i) {
        const auto p = simulate_path(c, rule, i);
        if (*std::min_element(p.prices.begin(), p.prices.end()) <= 0) continue;
        auto fills = path_fills(p, Side::buy, "buyer");
        const auto sells = path_fills(p, Side::sell, "seller");
        fills.insert(fills.end(), sells.begin(), sells.end());
        for (Formulation f : {Formulation::simple, Formulation::complex}) {
            const auto a = zero_sum_audit(fills, p.prices, f);
            ASSERT_TRUE(a.pass);
        }
    }
}

TEST(Summarize, QuantilesAgainstOracle) {
    oracle::Gen g(9);
    std::vector<double> v;
    for (int i = 0; i < 1001; ++i) v.push_back(g.normal());
    v.push_back(std::nan(""));
    const auto s = summarize(v);
    v.pop_back();
    EXPECT_EQ(s.count, 1001u);
    const double ps[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(s.quantiles[std::size_t(k)], quantile(v, ps[k]), 1e-14);
    double m = 0.0;
    for (double x : v) m += x;
    m /= double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    EXPECT_NEAR(s.mean, m, 1e-14);
    EXPECT_NEAR(s.std, std::sqrt(ss / double(v.size() - 1)), 1e-13);
}

TEST(Summarize, ConstantSample) {
    const auto s = summarize(std::vector<double>(100, 0.1));
    EXPECT_EQ(s.std, 0.0);
    EXPECT_EQ(s.mean, 0.1);
    EXPECT_EQ(s.quantiles[2], 0.1);
}

TEST(BruteForce, BenchmarkSimpleTwoStageHalves) {
    const auto c = config(Benchmark{1.0, 1.0}, 2, 1.0, 1);
    const auto r = brute_force_schedule(c, 100, Formulation::simple);
    EXPECT_NEAR(r.schedule.trades[0], 0.5, 1e-12);
    EXPECT_EQ(r.candidates, 101u);
}

TEST(BruteForce, ComplexTwoStageMatchesSolver) {
    const Benchmark m{1.0, 1.0};
    const auto c = config(m, 2, 1.0, 1);
    const auto r = brute_force_schedule(c, 10000, Formulation::complex);
    EXPECT_NEAR(r.schedule.trades[0], solve_benchmark_complex(m, c.horizon).schedule.trades[0], 1e-4);
}

TEST(BruteForce, Ar1SimpleThirds) {
    auto c = config(Ar1Extra{0.9, 0.4, 0.5, 1.0, 0.8}, 3, 3.0, 1);
    c.initial_state.aux = 0.6;
    const auto r = brute_force_schedule(c, 30, Formulation::simple);
    for (double s : r.schedule.trades) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(BruteForce, ObjectiveMatchesClosedForm) {
    const Benchmark m{0.7, 1.2};
    EXPECT_LE(oracle::rel_err(schedule_objective(m, 0.0, {1.0, 1.0, 1.0}, 3.0, Formulation::simple),
                              benchmark_value_simple(m, 3.0, 1)),
              1e-13);
}

TEST(BruteForce, BudgetExceeded) {
    const auto c = config(Benchmark{1.0, 1.0}, 6, 1.0, 1);
    BruteForceOptions o;
    o.budget = 1000;
    try {
        brute_force_schedule(c, 100, Formulation::simple, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

TEST(BalancedFills, IntervalsBalanceAndReproduce) {
    const auto a = generate_balanced_fills(3, 7, 5, 6);
    const auto b = generate_balanced_fills(3, 7, 5, 6);
    ASSERT_EQ(a.fills.size(), b.fills.size());
    EXPECT_EQ(a.price_path, b.price_path);
    std::vector<double> net(7, 0.0);
    for (const auto& f : a.fills) {
        EXPECT_EQ(f.qty, std::floor(f.qty));
        net[std::size_t(f.t)] += f.side == Side::buy ? f.qty : -f.qty;
    }
    for (double x : net) EXPECT_EQ(x, 0.0);
}

TEST(Buckets, Examples) {
    EXPECT_EQ(momentum_bucket(-0.03), Momentum::significant_adverse);
    EXPECT_EQ(momentum_bucket(0.0), Momentum::neutral);
    EXPECT_EQ(momentum_bucket(-0.01), Momentum::adverse);
    EXPECT_EQ(momentum_bucket(0.01), Momentum::favorable);
    EXPECT_EQ(momentum_bucket(0.03), Momentum::significant_favorable);
    EXPECT_EQ(volatility_bucket(0.0), Volatility::none);
    EXPECT_EQ(volatility_bucket(0.0005), Volatility::low);
    EXPECT_EQ(volatility_bucket(0.003), Volatility::moderate);
    EXPECT_EQ(volatility_bucket(0.01), Volatility::high);
    EXPECT_EQ(to_string(Momentum::significant_adverse), "Significant Adverse");
    EXPECT_EQ(to_string(Volatility::none), "No Volatility");
}

TEST(Buckets, GridCountsEverySample) {
    oracle::Gen g(2);
    std::vector<BucketSample> s;
    for (int i = 0; i < 5000; ++i) s.push_back({0.03 * g.normal(), std::abs(0.004 * g.normal()), g.normal()});
    const auto cells = momentum_volatility_buckets(s);
    ASSERT_EQ(cells.size(), 20u);
    std::size_t total = 0;
    for (const auto& c : cells) total += c.cost.count;
    EXPECT_EQ(total, 5000u);
}

TEST(SimConfig, Validation) {
    auto c = config(Benchmark{1.0, 1.0}, 2, 1.0, 0);
    EXPECT_THROW(validate(c), Error);
}
