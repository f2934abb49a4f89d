#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "optexec/attribution.hpp"
#include "optexec/models.hpp"
#include "optexec/solver.hpp"

namespace optexec {

struct SimConfig {
    ModelParams model = Benchmark{};
    Horizon horizon;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    MarketState initial_state;
    Side side = Side::buy;
    int threads = 0;  ///< 0: hardware concurrency; results do not depend on it
};

void validate(const SimConfig& c);

/// Trade at stage t given the pre-trade state and residual.
using TradeRule = std::function<double(int t, const MarketState& state, double w)>;

TradeRule trade_rule(const Schedule& s);
TradeRule trade_rule(const PolicyTable& p);

enum class PathStatus { ok, liquidity_violation, degenerate_price };

std::string to_string(PathStatus s);

struct SimulatedPath {
    std::vector<double> prices;     ///< P_0..P_T (up to the failing stage when excluded)
    std::vector<double> trades;     ///< S_1..S_T
    std::vector<double> residuals;  ///< W_1..W_T
    PathStatus status = PathStatus::ok;
    std::string detail;
};

/// One path on the substream (seed, index). Each stage draws the price shock
/// then the state innovation. Stage T trades the remainder.
SimulatedPath simulate_path(const SimConfig& c, const TradeRule& rule, std::size_t index);

/// Buy-side fills (or sell, per config) at path prices, zero trades dropped.
std::vector<Fill> path_fills(const SimulatedPath& p, Side side, const std::string& participant = "p1");

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation (n - 1)
    std::array<double, 5> quantiles{};  ///< 5, 25, 50, 75, 95 percent, linear interpolation
};

/// Summary of the given samples; NaN entries are skipped.
Summary summarize(const std::vector<double>& samples);

struct CostDistribution {
    Formulation formulation = Formulation::simple;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    /// Per path, NaN for excluded paths. Length n_paths.
    std::vector<double> shortfall, impact, timing;
    std::vector<double> side_return;  ///< side-adjusted (P_T - P_0)/P_0, negative is adverse
    std::vector<double> price_cov;    ///< coefficient of variation of P_0..P_T
    std::vector<PathStatus> status;
    std::size_t excluded = 0;
    Summary shortfall_summary, impact_summary, timing_summary;
    /// sum over stages of E[weight_t dP_t | dP_t > 0], weight S_t (simple) or
    /// W_t (complex), dP side-adjusted; standard errors combined in quadrature.
    double objective = 0.0;
    double objective_se = 0.0;
};

CostDistribution evaluate_policy(const SimConfig& c, const TradeRule& rule, Formulation f);
CostDistribution evaluate_policy(const SimConfig& c, const Schedule& s, Formulation f);
CostDistribution evaluate_policy(const SimConfig& c, const PolicyTable& p, Formulation f);

struct BruteForceOptions {
    std::size_t budget = 5'000'000;  ///< maximum number of candidate schedules
    std::size_t mc_paths = 2000;     ///< per candidate, models without a closed-form stage cost
};

struct BruteForceResult {
    Schedule schedule;
    double objective = 0.0;
    std::size_t candidates = 0;
};

/// Exhaustive search over schedules whose trades are multiples of S/grid.
/// Linear-Gaussian models use the closed-form conditional stage costs with the
/// state frozen at the initial observation; other models use the Monte Carlo
/// stage objective with common random numbers. Config error beyond the budget.
BruteForceResult brute_force_schedule(const SimConfig& c, int grid_per_stage, Formulation f,
                                      const BruteForceOptions& opt = {});

/// Closed-form objective of a fixed schedule for linear-Gaussian models.
double schedule_objective(const ModelParams& m, double x0, const std::vector<double>& trades,
                          double total_shares, Formulation f);

struct BalancedFillSet {
    std::vector<double> price_path;  ///< P_0..P_T
    std::vector<Fill> fills;
};

/// Random multi-participant fill set whose per-interval buy and sell
/// quantities match exactly (integer shares). Participant p1 buys, p2 sells,
/// the rest pick a side at random. Deterministic in (seed, index).
BalancedFillSet generate_balanced_fills(std::uint64_t seed, std::uint64_t index, int participants, int T);

// ---- momentum x volatility buckets ----

enum class Momentum { significant_adverse, adverse, neutral, favorable, significant_favorable };
enum class Volatility { high, moderate, low, none };

std::string to_string(Momentum m);
std::string to_string(Volatility v);

struct BucketThresholds {
    double significant = 0.02;       ///< |return| beyond this is significant
    double neutral = 1.0 / 300.0;    ///< |return| up to this is neutral
    double high_volatility = 0.005;  ///< CoV above this is high
    double low_volatility = 0.001;   ///< CoV below this is low
    double no_volatility = 1e-15;    ///< CoV at or below this is none
};

struct BucketSample {
    double side_return = 0.0;
    double cov = 0.0;
    double cost = 0.0;
};

Momentum momentum_bucket(double side_return, const BucketThresholds& th = {});
Volatility volatility_bucket(double cov, const BucketThresholds& th = {});

struct BucketCell {
    Momentum momentum = Momentum::neutral;
    Volatility volatility = Volatility::none;
    Summary cost;
};

/// 5 x 4 grid, row-major by momentum; empty cells have cost.count == 0.
std::vector<BucketCell> momentum_volatility_buckets(const std::vector<BucketSample>& samples,
                                                    const BucketThresholds& th = {});

/// Bucket samples from a distribution: shortfall in basis points as the cost.
std::vector<BucketSample> bucket_samples(const CostDistribution& d, double arrival_price, double total_shares);

}  // namespace optexec
