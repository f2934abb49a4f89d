#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/parallel.hpp"
#include "optexec/solver.hpp"
#include "optexec/stats.hpp"

namespace optexec {

double liquidity_stage_cost(const Liquidity& m, double price, double volume, double s,
                            double weight) {
    const double mean = price * (m.alpha + m.beta * s - m.gamma * m.rho * volume);
    const double sd = std::hypot(m.gamma * price * m.sigma_eta, m.sigma_eps);
    return weight * sd * mills_psi(mean / sd);
}

double liquidity_terminal_value(const Liquidity& m, double price, double volume, double w) {
    return liquidity_stage_cost(m, price, volume, w, w);
}

namespace {

using Continuation = std::function<double(double price, double volume, double w)>;

// Stage cost plus the tensor Gauss-Hermite expectation of the continuation
// over (eta, eps) at the successor state.
double stage_objective(const Liquidity& m, Formulation f, double price, double volume, double w,
                       double s, const QuadratureRule& rule, const Continuation& next) {
    const double weight = f == Formulation::simple ? s : w;
    double acc = 0.0;
    const std::size_t n = rule.nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double vol = m.rho * volume + std::numbers::sqrt2 * m.sigma_eta * rule.nodes[i];
        const double drift = price + price * (m.alpha + m.beta * s - m.gamma * vol);
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double p = drift + std::numbers::sqrt2 * m.sigma_eps * rule.nodes[j];
            inner += rule.weights[j] * next(p, vol, w - s);
        }
        acc += rule.weights[i] * inner;
    }
    return liquidity_stage_cost(m, price, volume, s, weight) + acc / std::numbers::pi;
}

// Feasible trades at stage t: S <= E[O_t] and the remainder fits in the
// expected volume of the later stages.
struct Interval {
    double lo, hi;
};

Interval trade_interval(const Liquidity& m, int t, int T, double volume, double w) {
    double future = 0.0, rk = m.rho;
    for (int k = 2; k <= T - t + 1; ++k) {
        rk *= m.rho;
        future += std::max(rk * volume, 0.0);
    }
    return {std::max(0.0, w - future), std::min(w, std::max(m.rho * volume, 0.0))};
}

// V_t(P, O, W) on a tensor grid: bilinear in (P, O), monotone cubic in W
// with V(0) = 0, held constant outside the grid.
class ValueTable {
public:
    ValueTable(std::vector<double> p, std::vector<double> o, std::vector<double> w)
        : p_(std::move(p)), o_(std::move(o)), w_(std::move(w)) {}

    void set(std::vector<double> values) {
        values_ = std::move(values);
        curves_.clear();
        std::vector<double> wx{0.0};
        wx.insert(wx.end(), w_.begin(), w_.end());
        for (std::size_t i = 0; i < p_.size() * o_.size(); ++i) {
            std::vector<double> vy{0.0};
            vy.insert(vy.end(), values_.begin() + long(i * w_.size()),
                      values_.begin() + long((i + 1) * w_.size()));
            curves_.emplace_back(wx, std::move(vy));
        }
    }

    double operator()(double price, double volume, double w) const {
        auto loc = [](const std::vector<double>& n, double x) -> std::pair<std::size_t, double> {
            if (n.size() == 1 || x <= n.front()) return {0, 0.0};
            if (x >= n.back()) return {n.size() - 2, 1.0};
            const std::size_t k = std::size_t(std::upper_bound(n.begin(), n.end(), x) - n.begin()) - 1;
            return {k, (x - n[k]) / (n[k + 1] - n[k])};
        };
        const auto [ip, tp] = loc(p_, price);
        const auto [io, to] = loc(o_, volume);
        double acc = 0.0;
        for (int a = 0; a < 2; ++a) {
            const double wa = a ? tp : 1.0 - tp;
            if (wa == 0.0) continue;
            const std::size_t i = std::min(ip + a, p_.size() - 1);
            for (int b = 0; b < 2; ++b) {
                const double wb = b ? to : 1.0 - to;
                if (wb == 0.0) continue;
                const std::size_t j = std::min(io + b, o_.size() - 1);
                acc += wa * wb * curves_[i * o_.size() + j](w);
            }
        }
        return acc;
    }

    const std::vector<double>& p() const { return p_; }
    const std::vector<double>& o() const { return o_; }

private:
    std::vector<double> p_, o_, w_, values_;
    std::vector<MonotoneCubic> curves_;
};

std::vector<double> spread_nodes(double center, double half, int n) {
    if (n <= 1 || half <= 0.0) return {center};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[std::size_t(i)] = center - half + 2.0 * half * i / (n - 1);
    return out;
}

}  // namespace

double liquidity_t1_objective(const Liquidity& m, Formulation f, double price, double volume,
                              double w, double s, int order) {
    const Continuation terminal = [&](double p, double o, double wr) {
        return liquidity_terminal_value(m, p, o, wr);
    };
    return stage_objective(m, f, price, volume, w, s, gauss_hermite_cached(order), terminal);
}

Solution solve_liquidity(const Liquidity& m, const Horizon& h, const MarketState& s0, Formulation f,
                         const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    const int T = h.T;
    Solution sol;
    sol.policy.model = "liquidity";
    sol.policy.formulation = f;

    const Interval first = trade_interval(m, 1, T, s0.aux, h.total_shares);
    if (!(first.lo <= first.hi))
        fail(ErrorKind::infeasible_liquidity,
             fmt::format("no feasible first trade: need S in [{}, {}] (volume {}, W {})", first.lo,
                         first.hi, s0.aux, h.total_shares));
    if (T == 1) {
        sol.schedule = make_schedule({h.total_shares}, h.total_shares);
        sol.policy.stages = {ClosedLinearPolicy{1.0}};
        sol.value = liquidity_terminal_value(m, s0.price, s0.aux, h.total_shares);
        sol.policy.value_samples = {{{h.total_shares, sol.value}}};
        return sol;
    }

    const auto grid = make_w_grid(h, opt);
    const QuadratureRule& full = gauss_hermite_cached(opt.quadrature_order);
    const QuadratureRule& coarse = gauss_hermite_cached(opt.recursion_quadrature_order);
    const Continuation terminal = [&](double p, double o, double w) {
        return liquidity_terminal_value(m, p, o, w);
    };

    // Certainty-equivalent centres for the state grids, using the equal split.
    std::vector<double> p_ce(static_cast<std::size_t>(T)), o_ce(static_cast<std::size_t>(T)), sd_p(static_cast<std::size_t>(T)), sd_o(static_cast<std::size_t>(T));
    {
        double p = s0.price, o = s0.aux, var_o = 0.0, var_p = 0.0;
        for (int t = 0; t < T; ++t) {
            p_ce[std::size_t(t)] = p;
            o_ce[std::size_t(t)] = o;
            sd_p[std::size_t(t)] = std::sqrt(var_p);
            sd_o[std::size_t(t)] = std::sqrt(var_o);
            const double step_var = std::pow(m.gamma * p * m.sigma_eta, 2) + m.sigma_eps * m.sigma_eps;
            o *= m.rho;
            p += p * (m.alpha + m.beta * h.total_shares / T - m.gamma * o);
            var_o = var_o * m.rho * m.rho + m.sigma_eta * m.sigma_eta;
            var_p += step_var;
        }
    }

    auto minimise = [&](int t, double price, double volume, double w, const QuadratureRule& rule,
                        const Continuation& next, double tol_rel) {
        Interval iv = trade_interval(m, t, T, volume, w);
        if (iv.hi < iv.lo) iv.lo = iv.hi = std::max(0.0, iv.hi);
        auto obj = [&](double s) { return stage_objective(m, f, price, volume, w, s, rule, next); };
        if (iv.hi - iv.lo <= 0.0) return MinResult{iv.lo, obj(iv.lo), 0};
        return golden_section_min(obj, iv.lo, iv.hi, tol_rel * std::max(w, 1e-300), opt.max_iter);
    };

    // Tables for stages 2..T-1 over (P_{t-1}, O_{t-1}, W_t).
    std::vector<ValueTable> tables;
    std::vector<std::vector<double>> table_fractions(static_cast<std::size_t>(T));
    tables.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const int n = opt.liquidity_state_nodes;
        tables.emplace_back(spread_nodes(p_ce[std::size_t(t)], opt.state_width_sd * sd_p[std::size_t(t)], n),
                            spread_nodes(o_ce[std::size_t(t)], opt.state_width_sd * sd_o[std::size_t(t)], n),
                            grid);
    }
    auto continuation_after = [&](int t) -> Continuation {
        if (t + 1 == T) return terminal;
        const ValueTable* table = &tables[std::size_t(t)];  // stage t+1 table
        return [table](double p, double o, double w) { return (*table)(p, o, w); };
    };
    for (int t = T - 1; t >= 2; --t) {
        ValueTable& table = tables[std::size_t(t - 1)];
        const auto& pn = table.p();
        const auto& on = table.o();
        const std::size_t nw = grid.size();
        std::vector<double> values(pn.size() * on.size() * nw), fr(values.size());
        const Continuation next = continuation_after(t);
        parallel_for(values.size(), opt.threads, [&](std::size_t idx) {
            const std::size_t k = idx % nw, j = (idx / nw) % on.size(), i = idx / (nw * on.size());
            const MinResult r = minimise(t, pn[i], on[j], grid[k], coarse, next, 1e-8);
            values[idx] = r.value;
            fr[idx] = std::clamp(r.x / grid[k], 0.0, 1.0);
        });
        table.set(std::move(values));
        table_fractions[std::size_t(t - 1)] = std::move(fr);
    }

    // Stage 1 at the initial state with the full rule.
    const Continuation next1 = continuation_after(1);
    std::vector<double> fr1(grid.size()), v1(grid.size());
    parallel_for(grid.size(), opt.threads, [&](std::size_t k) {
        const MinResult r = minimise(1, s0.price, s0.aux, grid[k], full, next1, 1e-10);
        fr1[k] = std::clamp(r.x / grid[k], 0.0, 1.0);
        v1[k] = r.value;
    });

    sol.policy.stages.resize(static_cast<std::size_t>(T));
    sol.policy.value_samples.resize(static_cast<std::size_t>(T));
    sol.policy.stages[0] = NumericalPolicy{grid, {StateAxis{"price", {s0.price}}, StateAxis{"volume", {s0.aux}}}, fr1};
    for (std::size_t k = 0; k < grid.size(); ++k) sol.policy.value_samples[0].push_back({grid[k], v1[k]});
    for (int t = 2; t < T; ++t) {
        const ValueTable& table = tables[std::size_t(t - 1)];
        sol.policy.stages[std::size_t(t - 1)] =
            NumericalPolicy{grid, {StateAxis{"price", table.p()}, StateAxis{"volume", table.o()}},
                            table_fractions[std::size_t(t - 1)]};
    }
    sol.policy.stages[std::size_t(T - 1)] = ClosedLinearPolicy{1.0};

    // Reporting path: noises at their means, volume propagated by rho.
    std::vector<double> trades;
    double w = h.total_shares, p = s0.price, o = s0.aux;
    for (int t = 1; t <= T; ++t) {
        if (t > 1) {
            auto& vs = sol.policy.value_samples[std::size_t(t - 1)];
            for (double wn : grid)
                vs.push_back({wn, t == T ? liquidity_terminal_value(m, p, o, wn) : tables[std::size_t(t - 1)](p, o, wn)});
        }
        double s = w;
        if (t < T) {
            const Interval iv = trade_interval(m, t, T, o, w);
            if (iv.hi < iv.lo)
                sol.warnings.push_back(fmt::format(
                    "liquidity: expected volume cannot absorb the remaining {} shares from stage {}", w, t));
            const MinResult r = minimise(t, p, o, w, full, continuation_after(t), 1e-10);
            s = r.x;
            if (t == 1) {
                sol.value = r.value;
                if (2 * opt.quadrature_order <= 128) {
                    const double fine = stage_objective(m, f, p, o, w, s, gauss_hermite_cached(2 * opt.quadrature_order),
                                                        continuation_after(1));
                    if (std::abs(fine - r.value) > opt.resolution_tol * std::abs(fine))
                        sol.warnings.push_back(fmt::format(
                            "resolution: quadrature order {} vs {} differ by {:.3g} relative",
                            opt.quadrature_order, 2 * opt.quadrature_order, std::abs(fine - r.value) / std::abs(fine)));
                }
            }
        } else if (w > std::max(m.rho * o, 0.0)) {
            sol.warnings.push_back(fmt::format(
                "liquidity: terminal trade {} exceeds expected volume {}", w, m.rho * o));
        }
        trades.push_back(s);
        o *= m.rho;
        p += p * (m.alpha + m.beta * s - m.gamma * o);
        w -= s;
    }
    sol.schedule = make_schedule(trades, h.total_shares);
    return sol;
}

}  // namespace optexec
