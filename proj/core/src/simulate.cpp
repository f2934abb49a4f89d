#include "optexec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/parallel.hpp"
#include "optexec/rng.hpp"
#include "optexec/stats.hpp"

namespace optexec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kBlock = 4096;

// Running count / mean / M2, merged in a fixed order.
struct Moments {
    double n = 0.0, mean = 0.0, m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double total = n + o.n, d = o.mean - mean;
        mean += d * o.n / total;
        m2 += o.m2 + d * d * n * o.n / total;
        n = total;
    }
    double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
};

double side_sign(Side s) { return s == Side::buy ? 1.0 : -1.0; }

}  // namespace

void validate(const SimConfig& c) {
    validate(c.model);
    validate(c.horizon);
    if (c.n_paths < 1) fail(ErrorKind::validation, "n_paths must be >= 1");
    if (!std::isfinite(c.initial_state.price) || !(c.initial_state.price > 0.0))
        fail(ErrorKind::validation, fmt::format("initial_state.price = {} must be > 0", c.initial_state.price));
    if (!std::isfinite(c.initial_state.aux))
        fail(ErrorKind::validation, "initial_state.aux must be finite");
    if (std::holds_alternative<LinearPercentage>(c.model) && !(c.initial_state.no_impact_price > 0.0))
        fail(ErrorKind::validation, "initial_state.no_impact_price must be > 0");
}

TradeRule trade_rule(const Schedule& s) {
    return [trades = s.trades](int t, const MarketState&, double w) {
        return std::min(trades[static_cast<std::size_t>(t - 1)], w);
    };
}

TradeRule trade_rule(const PolicyTable& p) {
    return [p](int t, const MarketState& state, double w) { return p.trade(t, state, w); };
}

std::string to_string(PathStatus s) {
    switch (s) {
        case PathStatus::ok: return "ok";
        case PathStatus::liquidity_violation: return "liquidity_violation";
        case PathStatus::degenerate_price: return "degenerate_price";
    }
    return "unknown";
}

SimulatedPath simulate_path(const SimConfig& c, const TradeRule& rule, std::size_t index) {
    const int T = c.horizon.T;
    SimulatedPath p;
    p.prices.reserve(static_cast<std::size_t>(T) + 1);
    p.trades.reserve(static_cast<std::size_t>(T));
    p.residuals.reserve(static_cast<std::size_t>(T));
    NormalStream rng(c.seed, index);
    MarketState state = c.initial_state;
    p.prices.push_back(state.price);
    double w = c.horizon.total_shares;
    for (int t = 1; t <= T; ++t) {
        const double s = t == T ? w : std::clamp(rule(t, state, w), 0.0, w);
        const double z1 = rng.next(), z2 = rng.next();
        p.residuals.push_back(w);
        p.trades.push_back(s);
        try {
            state = step(c.model, state, s, z1, z2);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::liquidity_violation) throw;
            p.status = PathStatus::liquidity_violation;
            p.detail = e.what();
            return p;
        }
        p.prices.push_back(state.price);
        if (!(state.price > 0.0) || !std::isfinite(state.price)) {
            p.status = PathStatus::degenerate_price;
            p.detail = fmt::format("price {} at t = {}", state.price, t);
            return p;
        }
        w = t == T ? 0.0 : w - s;
    }
    return p;
}

std::vector<Fill> path_fills(const SimulatedPath& p, Side side, const std::string& participant) {
    std::vector<Fill> fills;
    for (std::size_t i = 0; i < p.trades.size(); ++i)
        if (p.trades[i] > 0.0) fills.push_back({int(i) + 1, p.prices[i + 1], p.trades[i], side, participant});
    return fills;
}

Summary summarize(const std::vector<double>& samples) {
    std::vector<double> x;
    x.reserve(samples.size());
    for (double v : samples)
        if (!std::isnan(v)) x.push_back(v);
    Summary s;
    s.count = x.size();
    if (x.empty()) {
        s.mean = s.std = kNaN;
        s.quantiles.fill(kNaN);
        return s;
    }
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    if (x.front() == x.back()) {
        s.mean = x.front();
        s.std = 0.0;
    } else {
        s.mean = pairwise_sum(x) / n;
        std::vector<double> sq(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - s.mean) * (x[i] - s.mean);
        s.std = x.size() > 1 ? std::sqrt(pairwise_sum(sq) / (n - 1.0)) : 0.0;
    }
    const std::array<double, 5> probs{0.05, 0.25, 0.5, 0.75, 0.95};
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double h = (n - 1.0) * probs[k];
        const std::size_t lo = std::size_t(std::floor(h));
        const std::size_t hi = std::min(lo + 1, x.size() - 1);
        s.quantiles[k] = x[lo] + (h - double(lo)) * (x[hi] - x[lo]);
    }
    return s;
}

CostDistribution evaluate_policy(const SimConfig& c, const TradeRule& rule, Formulation f) {
    validate(c);
    const std::size_t n = c.n_paths;
    const int T = c.horizon.T;
    const double sign = side_sign(c.side);
    CostDistribution d;
    d.formulation = f;
    d.seed = c.seed;
    d.n_paths = n;
    d.shortfall.assign(n, kNaN);
    d.impact.assign(n, kNaN);
    d.timing.assign(n, kNaN);
    d.side_return.assign(n, kNaN);
    d.price_cov.assign(n, kNaN);
    d.status.assign(n, PathStatus::ok);

    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<std::vector<Moments>> stage_moments(blocks, std::vector<Moments>(static_cast<std::size_t>(T)));

    parallel_for(blocks, c.threads, [&](std::size_t b) {
        auto& moments = stage_moments[b];
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            const SimulatedPath p = simulate_path(c, rule, i);
            d.status[i] = p.status;
            if (p.status != PathStatus::ok) continue;
            const OrderContext ctx{p.prices[0], c.horizon.total_shares, T, p.prices};
            const AttributionReport r = attribute(ctx, path_fills(p, c.side), f);
            d.shortfall[i] = r.shortfall;
            d.impact[i] = r.impact;
            d.timing[i] = r.timing;
            d.side_return[i] = -sign * (p.prices.back() - p.prices.front()) / p.prices.front();
            double mean = 0.0, m2 = 0.0;
            for (std::size_t k = 0; k < p.prices.size(); ++k) {
                const double delta = p.prices[k] - mean;
                mean += delta / double(k + 1);
                m2 += delta * (p.prices[k] - mean);
            }
            d.price_cov[i] = std::sqrt(m2 / double(p.prices.size())) / mean;
            for (int t = 1; t <= T; ++t) {
                const std::size_t k = static_cast<std::size_t>(t - 1);
                const double dp = sign * (p.prices[k + 1] - p.prices[k]);
                if (dp > 0.0) moments[k].add((f == Formulation::simple ? p.trades[k] : p.residuals[k]) * dp);
            }
        }
    });

    d.excluded = std::size_t(std::count_if(d.status.begin(), d.status.end(),
                                           [](PathStatus s) { return s != PathStatus::ok; }));
    d.shortfall_summary = summarize(d.shortfall);
    d.impact_summary = summarize(d.impact);
    d.timing_summary = summarize(d.timing);

    double var = 0.0;
    std::vector<double> stage_means;
    for (int t = 1; t <= T; ++t) {
        Moments m;
        for (std::size_t b = 0; b < blocks; ++b) m.merge(stage_moments[b][static_cast<std::size_t>(t - 1)]);
        if (m.n == 0.0) continue;
        stage_means.push_back(m.mean);
        var += m.variance() / m.n;
    }
    d.objective = pairwise_sum(stage_means);
    d.objective_se = std::sqrt(var);
    return d;
}

CostDistribution evaluate_policy(const SimConfig& c, const Schedule& s, Formulation f) {
    validate(s, c.horizon);
    return evaluate_policy(c, trade_rule(s), f);
}

CostDistribution evaluate_policy(const SimConfig& c, const PolicyTable& p, Formulation f) {
    if (p.stages.size() != static_cast<std::size_t>(c.horizon.T))
        fail(ErrorKind::validation,
             fmt::format("policy has {} stages, config horizon is {}", p.stages.size(), c.horizon.T));
    return evaluate_policy(c, trade_rule(p), f);
}

double schedule_objective(const ModelParams& m, double x0, const std::vector<double>& trades,
                          double total_shares, Formulation f) {
    const LinearGaussian lg = linear_gaussian(m, x0);
    double w = total_shares;
    std::vector<double> terms;
    terms.reserve(trades.size());
    for (double s : trades) {
        const double weight = f == Formulation::simple ? s : w;
        if (weight > 0.0) terms.push_back(weight * lg_step_cost(lg, s));
        w -= s;
    }
    return pairwise_sum(terms);
}

namespace {

// Calls fn(k) for every composition k of `grid` into `parts` nonnegative integers.
template <class Fn>
void for_each_composition(int grid, int parts, Fn&& fn) {
    std::vector<int> k(static_cast<std::size_t>(parts), 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == parts - 1) {
            k[static_cast<std::size_t>(pos)] = left;
            fn(k);
            return;
        }
        for (int i = 0; i <= left; ++i) {
            k[static_cast<std::size_t>(pos)] = i;
            self(self, pos + 1, left - i);
        }
    };
    rec(rec, 0, grid);
}

double composition_count(int grid, int parts) {
    double c = 1.0;  // C(grid + parts - 1, parts - 1)
    for (int i = 1; i < parts; ++i) c = c * double(grid + i) / double(i);
    return std::round(c);
}

}  // namespace

BruteForceResult brute_force_schedule(const SimConfig& c, int grid_per_stage, Formulation f,
                                      const BruteForceOptions& opt) {
    validate(c);
    if (grid_per_stage < 1) fail(ErrorKind::config, "grid_per_stage must be >= 1");
    const int T = c.horizon.T;
    const double count = composition_count(grid_per_stage, T);
    if (count > double(opt.budget))
        fail(ErrorKind::config, fmt::format("brute force needs {} candidate schedules, budget is {}", count,
                                            opt.budget));
    const double total = c.horizon.total_shares;
    const double unit = total / grid_per_stage;
    auto to_trades = [&](const std::vector<int>& k) {
        std::vector<double> s(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) s[i] = unit * k[i];
        return s;
    };

    BruteForceResult best;
    best.objective = std::numeric_limits<double>::infinity();
    if (is_linear_gaussian(c.model)) {
        for_each_composition(grid_per_stage, T, [&](const std::vector<int>& k) {
            const auto s = to_trades(k);
            const double v = schedule_objective(c.model, c.initial_state.aux, s, total, f);
            ++best.candidates;
            if (v < best.objective) {
                best.objective = v;
                best.schedule = make_schedule(s, total);
            }
        });
        return best;
    }

    std::vector<std::vector<int>> cands;
    for_each_composition(grid_per_stage, T, [&](const std::vector<int>& k) { cands.push_back(k); });
    std::vector<double> values(cands.size(), std::numeric_limits<double>::infinity());
    SimConfig mc = c;
    mc.n_paths = opt.mc_paths;
    mc.threads = 1;
    parallel_for(cands.size(), c.threads, [&](std::size_t j) {
        const auto s = to_trades(cands[j]);
        const CostDistribution d = evaluate_policy(mc, trade_rule(make_schedule(s, total)), f);
        // Candidates that breach liquidity on more than 1% of paths are rejected.
        if (double(d.excluded) <= 0.01 * double(mc.n_paths)) values[j] = d.objective;
    });
    best.candidates = cands.size();
    for (std::size_t j = 0; j < cands.size(); ++j)
        if (values[j] < best.objective) {
            best.objective = values[j];
            best.schedule = make_schedule(to_trades(cands[j]), total);
        }
    if (!std::isfinite(best.objective))
        fail(ErrorKind::infeasible_liquidity, "every candidate schedule breaches liquidity on more than 1% of paths");
    return best;
}

BalancedFillSet generate_balanced_fills(std::uint64_t seed, std::uint64_t index, int participants, int T) {
    if (participants < 2) fail(ErrorKind::config, "a balanced fill set needs at least two participants");
    if (T < 1) fail(ErrorKind::config, "a balanced fill set needs T >= 1");
    NormalStream rng(seed, index);
    BalancedFillSet out;
    out.price_path.push_back(50.0 + 100.0 * rng.uniform());
    for (int t = 1; t <= T; ++t) out.price_path.push_back(out.price_path.back() * (1.0 + 0.01 * rng.next()));

    std::vector<Side> side(static_cast<std::size_t>(participants));
    side[0] = Side::buy;
    side[1] = Side::sell;
    for (std::size_t i = 2; i < side.size(); ++i) side[i] = rng.uniform() < 0.5 ? Side::buy : Side::sell;
    std::vector<std::size_t> buyers, sellers;
    for (std::size_t i = 0; i < side.size(); ++i) (side[i] == Side::buy ? buyers : sellers).push_back(i);
    auto name = [](std::size_t i) { return fmt::format("p{}", i + 1); };

    for (int t = 1; t <= T; ++t) {
        const double price = out.price_path[static_cast<std::size_t>(t)];
        long long bought = 0;
        for (std::size_t b : buyers) {
            long long q = (long long)(rng.uniform() * 100.0);
            if (b == buyers.front() && t == 1 && q == 0) q = 1;
            if (q > 0) out.fills.push_back({t, price, double(q), Side::buy, name(b)});
            bought += q;
        }
        long long left = bought;
        for (std::size_t k = 0; k < sellers.size(); ++k) {
            long long q = k + 1 == sellers.size() ? left : (long long)(rng.uniform() * double(left + 1));
            q = std::min(q, left);
            if (q > 0) out.fills.push_back({t, price, double(q), Side::sell, name(sellers[k])});
            left -= q;
        }
    }
    return out;
}

std::string to_string(Momentum m) {
    switch (m) {
        case Momentum::significant_adverse: return "Significant Adverse";
        case Momentum::adverse: return "Adverse";
        case Momentum::neutral: return "Neutral";
        case Momentum::favorable: return "Favorable";
        case Momentum::significant_favorable: return "Significant Favorable";
    }
    return "unknown";
}

std::string to_string(Volatility v) {
    switch (v) {
        case Volatility::high: return "High Volatility";
        case Volatility::moderate: return "Moderate Volatility";
        case Volatility::low: return "Low Volatility";
        case Volatility::none: return "No Volatility";
    }
    return "unknown";
}

Momentum momentum_bucket(double r, const BucketThresholds& th) {
    if (r < -th.significant) return Momentum::significant_adverse;
    if (r < -th.neutral) return Momentum::adverse;
    if (r <= th.neutral) return Momentum::neutral;
    if (r <= th.significant) return Momentum::favorable;
    return Momentum::significant_favorable;
}

Volatility volatility_bucket(double cov, const BucketThresholds& th) {
    if (cov <= th.no_volatility) return Volatility::none;
    if (cov < th.low_volatility) return Volatility::low;
    if (cov <= th.high_volatility) return Volatility::moderate;
    return Volatility::high;
}

std::vector<BucketCell> momentum_volatility_buckets(const std::vector<BucketSample>& samples,
                                                    const BucketThresholds& th) {
    std::vector<std::vector<double>> costs(20);
    for (const auto& s : samples) {
        if (std::isnan(s.side_return) || std::isnan(s.cov)) continue;
        const auto m = std::size_t(momentum_bucket(s.side_return, th));
        const auto v = std::size_t(volatility_bucket(s.cov, th));
        costs[m * 4 + v].push_back(s.cost);
    }
    std::vector<BucketCell> cells;
    for (std::size_t m = 0; m < 5; ++m)
        for (std::size_t v = 0; v < 4; ++v) {
            BucketCell cell{Momentum(m), Volatility(v), summarize(costs[m * 4 + v])};
            cells.push_back(cell);
        }
    return cells;
}

std::vector<BucketSample> bucket_samples(const CostDistribution& d, double arrival_price, double total_shares) {
    std::vector<BucketSample> out;
    for (std::size_t i = 0; i < d.n_paths; ++i) {
        if (d.status[i] != PathStatus::ok) continue;
        out.push_back({d.side_return[i], d.price_cov[i], 1e4 * d.shortfall[i] / (arrival_price * total_shares)});
    }
    return out;
}

}  // namespace optexec
