#include "optexec/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/stats.hpp"

namespace optexec {

std::string to_string(Side s) { return s == Side::buy ? "buy" : "sell"; }

Side parse_side(const std::string& s) {
    if (s == "buy") return Side::buy;
    if (s == "sell") return Side::sell;
    fail(ErrorKind::validation, fmt::format("side = '{}' is not buy or sell", s));
}

namespace {

void check_context(const OrderContext& ctx) {
    if (ctx.horizon < 1) fail(ErrorKind::validation, fmt::format("context.horizon = {} must be >= 1", ctx.horizon));
    if (!(ctx.arrival_price > 0.0) || !std::isfinite(ctx.arrival_price))
        fail(ErrorKind::validation, fmt::format("context.arrival_price = {} must be > 0", ctx.arrival_price));
    if (!(ctx.total_shares > 0.0) || !std::isfinite(ctx.total_shares))
        fail(ErrorKind::validation, fmt::format("context.total_shares = {} must be > 0", ctx.total_shares));
    if (ctx.price_path.size() != std::size_t(ctx.horizon) + 1)
        fail(ErrorKind::validation, fmt::format("context.price_path has {} entries, expected T + 1 = {}",
                                                ctx.price_path.size(), ctx.horizon + 1));
    if (ctx.price_path[0] != ctx.arrival_price)
        fail(ErrorKind::validation, fmt::format("context.price_path[0] = {} differs from arrival_price = {}",
                                                ctx.price_path[0], ctx.arrival_price));
    for (std::size_t i = 0; i < ctx.price_path.size(); ++i)
        if (!std::isfinite(ctx.price_path[i]))
            fail(ErrorKind::validation, fmt::format("context.price_path[{}] is not finite", i));
}

// Validates the fill set as one order and returns its side.
Side check_fills(const OrderContext& ctx, const std::vector<Fill>& fills) {
    check_context(ctx);
    if (fills.empty()) fail(ErrorKind::validation, "order has no fills");
    const Side side = fills.front().side;
    std::vector<double> q;
    for (std::size_t i = 0; i < fills.size(); ++i) {
        const Fill& f = fills[i];
        if (f.t < 1 || f.t > ctx.horizon)
            fail(ErrorKind::validation, fmt::format("fills[{}].t = {} outside 1..{}", i, f.t, ctx.horizon));
        if (!(f.qty > 0.0) || !std::isfinite(f.qty))
            fail(ErrorKind::validation, fmt::format("fills[{}].qty = {} must be > 0", i, f.qty));
        if (!(f.price > 0.0) || !std::isfinite(f.price))
            fail(ErrorKind::validation, fmt::format("fills[{}].price = {} must be > 0", i, f.price));
        if (f.side != side) fail(ErrorKind::validation, fmt::format("fills[{}] mixes buy and sell in one order", i));
        q.push_back(f.qty);
    }
    const double total = pairwise_sum(q);
    if (std::abs(total - ctx.total_shares) > 1e-9 * ctx.total_shares)
        fail(ErrorKind::validation,
             fmt::format("fill quantities sum to {}, order total_shares is {}", total, ctx.total_shares));
    return side;
}

double adverse_step(const OrderContext& ctx, Side side, int t) {
    const double d = ctx.price_path[std::size_t(t)] - ctx.price_path[std::size_t(t - 1)];
    return side == Side::buy ? d : -d;
}

// Pre-trade residual W_t for t = 1..T (index t - 1).
std::vector<double> residuals(const OrderContext& ctx, const std::vector<Fill>& fills) {
    std::vector<double> per_t(std::size_t(ctx.horizon), 0.0);
    for (const Fill& f : fills) per_t[std::size_t(f.t - 1)] += f.qty;
    std::vector<double> w(std::size_t(ctx.horizon));
    double done = 0.0;
    for (int t = 1; t <= ctx.horizon; ++t) {
        w[std::size_t(t - 1)] = std::max(ctx.total_shares - done, 0.0);
        done += per_t[std::size_t(t - 1)];
    }
    return w;
}

double bps(const OrderContext& ctx, double x) { return 1e4 * x / (ctx.arrival_price * ctx.total_shares); }

}  // namespace

double shortfall(const OrderContext& ctx, const std::vector<Fill>& fills) {
    const Side side = check_fills(ctx, fills);
    std::vector<double> v;
    v.reserve(fills.size() + 1);
    for (const Fill& f : fills) v.push_back(f.qty * f.price);
    v.push_back(-ctx.total_shares * ctx.arrival_price);
    const double s = pairwise_sum(v);
    return side == Side::buy ? s : -s;
}

double shortfall_nested(const OrderContext& ctx, const std::vector<Fill>& fills) {
    const Side side = check_fills(ctx, fills);
    std::vector<double> v;
    for (const Fill& f : fills) {
        double inner = 0.0;
        for (int j = 1; j <= f.t; ++j) inner += ctx.price_path[std::size_t(j)] - ctx.price_path[std::size_t(j - 1)];
        v.push_back(f.qty * inner);
    }
    const double s = pairwise_sum(v);
    return side == Side::buy ? s : -s;
}

double impact_simple(const OrderContext& ctx, const std::vector<Fill>& fills) {
    const Side side = check_fills(ctx, fills);
    std::vector<double> v;
    for (const Fill& f : fills) v.push_back(std::max(adverse_step(ctx, side, f.t), 0.0) * f.qty);
    return pairwise_sum(v);
}

double impact_complex(const OrderContext& ctx, const std::vector<Fill>& fills) {
    const Side side = check_fills(ctx, fills);
    const auto w = residuals(ctx, fills);
    std::vector<double> v;
    for (int t = 1; t <= ctx.horizon; ++t) v.push_back(std::max(adverse_step(ctx, side, t), 0.0) * w[std::size_t(t - 1)]);
    return pairwise_sum(v);
}

double impact_net_move(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f) {
    const Side side = check_fills(ctx, fills);
    const double sign = side == Side::buy ? 1.0 : -1.0;
    // Adverse increment beyond the most adverse level seen so far.
    std::vector<double> inc(std::size_t(ctx.horizon));
    double extreme = sign * ctx.price_path[0];
    for (int t = 1; t <= ctx.horizon; ++t) {
        const double p = sign * ctx.price_path[std::size_t(t)];
        inc[std::size_t(t - 1)] = std::max(p - extreme, 0.0);
        extreme = std::max(extreme, p);
    }
    std::vector<double> v;
    if (f == Formulation::simple) {
        for (const Fill& x : fills) v.push_back(inc[std::size_t(x.t - 1)] * x.qty);
    } else {
        const auto w = residuals(ctx, fills);
        for (int t = 1; t <= ctx.horizon; ++t) v.push_back(inc[std::size_t(t - 1)] * w[std::size_t(t - 1)]);
    }
    return pairwise_sum(v);
}

double timing(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f) {
    const double mi = f == Formulation::simple ? impact_simple(ctx, fills) : impact_complex(ctx, fills);
    return shortfall(ctx, fills) - mi;
}

AttributionReport attribute(const OrderContext& ctx, const std::vector<Fill>& fills, Formulation f) {
    AttributionReport r;
    r.formulation = f;
    const double total = shortfall(ctx, fills);
    r.impact = f == Formulation::simple ? impact_simple(ctx, fills) : impact_complex(ctx, fills);
    r.timing = total - r.impact;
    // Reported as the sum so the decomposition holds exactly in floating point.
    r.shortfall = r.impact + r.timing;
    r.shortfall_bps = bps(ctx, r.shortfall);
    r.impact_bps = bps(ctx, r.impact);
    r.timing_bps = bps(ctx, r.timing);
    return r;
}

std::vector<std::pair<std::string, std::vector<Fill>>> by_participant(const std::vector<Fill>& fills) {
    std::vector<std::pair<std::string, std::vector<Fill>>> out;
    std::map<std::string, std::size_t> index;
    for (const Fill& f : fills) {
        auto [it, inserted] = index.try_emplace(f.participant, out.size());
        if (inserted) out.push_back({f.participant, {}});
        out[it->second].second.push_back(f);
    }
    return out;
}

ZeroSumAudit zero_sum_audit(const std::vector<Fill>& fills, const std::vector<double>& price_path,
                            Formulation f, double tolerance) {
    if (price_path.size() < 2) fail(ErrorKind::validation, "price_path needs at least P_0 and P_1");
    const int T = int(price_path.size()) - 1;
    std::vector<std::vector<double>> bought(static_cast<std::size_t>(T)), sold(static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < fills.size(); ++i) {
        const Fill& x = fills[i];
        if (x.t < 1 || x.t > T) fail(ErrorKind::validation, fmt::format("fills[{}].t = {} outside 1..{}", i, x.t, T));
        (x.side == Side::buy ? bought : sold)[std::size_t(x.t - 1)].push_back(x.qty);
    }
    for (int t = 1; t <= T; ++t) {
        const double b = pairwise_sum(bought[std::size_t(t - 1)]);
        const double s = pairwise_sum(sold[std::size_t(t - 1)]);
        if (std::abs(b - s) > 1e-12 * std::max({std::abs(b), std::abs(s), 1.0}))
            fail(ErrorKind::audit, fmt::format("interval {} unbalanced: bought {} vs sold {}", t, b, s));
    }

    ZeroSumAudit audit;
    audit.formulation = f;
    audit.tolerance = tolerance;
    std::vector<double> mi, mt, scale;
    for (auto& [name, own] : by_participant(fills)) {
        std::vector<double> q;
        for (const Fill& x : own) q.push_back(x.qty);
        OrderContext ctx{price_path[0], pairwise_sum(q), T, price_path};
        ParticipantAttribution pa;
        pa.participant = name;
        pa.side = own.front().side;
        pa.total_shares = ctx.total_shares;
        try {
            pa.report = attribute(ctx, own, f);
        } catch (const Error& e) {
            throw Error(e.kind(), fmt::format("participant '{}': {}", name, e.what()));
        }
        mi.push_back(pa.report.impact);
        mt.push_back(pa.report.timing);
        scale.push_back(ctx.total_shares * ctx.arrival_price);
        audit.participants.push_back(std::move(pa));
    }
    audit.total_impact = pairwise_sum(mi);
    audit.total_timing = pairwise_sum(mt);
    audit.scale = pairwise_sum(scale);
    audit.pass = std::abs(audit.total_impact + audit.total_timing) <= tolerance * audit.scale;
    return audit;
}

}  // namespace optexec
