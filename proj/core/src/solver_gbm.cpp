#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/parallel.hpp"
#include "optexec/rng.hpp"
#include "optexec/solver.hpp"
#include "optexec/stats.hpp"

namespace optexec {

namespace {

constexpr int kBasis = 6;

// Everything below is per unit of no-impact price: with r = P/P~ the price
// step divided by P~ is e^B (1 + theta S + gamma X') - r, so values scale
// with P~ and depend on the state only through (r, x).
double unit_step_cost(const LinearPercentage& m, double r, double x, double s, double weight, int t) {
    try {
        return weight * mixture_conditional_mean(m.mu_B, m.sigma_B, 1.0 + m.theta * s + m.gamma * m.rho * x,
                                                 std::abs(m.gamma) * m.sigma_eta, -r);
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("stage {}: {}", t, e.what()));
    }
}

std::array<double, kBasis> basis(double r, double x) { return {1.0, r, x, r * r, r * x, x * x}; }

// E[basis(1 + theta S + gamma x', x')] for x' ~ N(rho x, sigma_eta^2).
std::array<double, kBasis> expected_basis(const LinearPercentage& m, double x, double s) {
    const double a = m.rho * x, v = m.sigma_eta * m.sigma_eta;
    const double c = 1.0 + m.theta * s;
    const double er = c + m.gamma * a;
    return {1.0, er, a, er * er + m.gamma * m.gamma * v, er * a + m.gamma * v, a * a + v};
}

struct Fit {
    std::vector<std::array<double, kBasis>> coef;  // per W node
};

Fit least_squares(const std::vector<std::array<double, kBasis>>& rows,
                  const std::vector<std::vector<double>>& targets) {
    const std::size_t n = rows.size();
    Eigen::MatrixXd A(long(n), kBasis);
    for (std::size_t i = 0; i < n; ++i)
        for (int b = 0; b < kBasis; ++b) A(long(i), b) = rows[i][std::size_t(b)];
    const auto qr = A.colPivHouseholderQr();
    Fit fit;
    for (const auto& y : targets) {
        const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), long(y.size()));
        const Eigen::VectorXd c = qr.solve(rhs);
        std::array<double, kBasis> a{};
        for (int b = 0; b < kBasis; ++b) a[std::size_t(b)] = c(b);
        fit.coef.push_back(a);
    }
    return fit;
}

}  // namespace

double gbm_terminal_value(const LinearPercentage& m, double no_impact_price, double price, double x,
                          double w) {
    if (!(w > 0.0)) return 0.0;
    return no_impact_price * unit_step_cost(m, price / no_impact_price, x, w, w, 0);
}

Solution solve_gbm_simple(const LinearPercentage& m, const Horizon& h, const MarketState& s0,
                          const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    if (!(s0.no_impact_price > 0.0) || !std::isfinite(s0.price) || !std::isfinite(s0.aux))
        fail(ErrorKind::validation, "initial state needs no_impact_price > 0 and finite price, aux");
    const int T = h.T;
    const double r0 = s0.price / s0.no_impact_price;
    Solution sol;
    sol.policy.model = "linear_percentage";
    sol.policy.formulation = Formulation::simple;

    auto v_terminal = [&](double r, double x, double w) {
        return w > 0.0 ? unit_step_cost(m, r, x, w, w, T) : 0.0;
    };
    if (T == 1) {
        sol.schedule = make_schedule({h.total_shares}, h.total_shares);
        sol.policy.stages = {ClosedLinearPolicy{1.0}};
        sol.value = s0.no_impact_price * v_terminal(r0, s0.aux, h.total_shares);
        sol.policy.value_samples = {{{h.total_shares, sol.value}}};
        return sol;
    }

    SolverOptions wopt = opt;
    wopt.grid_nodes = opt.regression_w_nodes;
    const auto grid = make_w_grid(h, wopt);
    const std::size_t J = grid.size();
    const double growth = std::exp(m.mu_B + 0.5 * m.sigma_B * m.sigma_B);
    const QuadratureRule& rule = gauss_hermite_cached(opt.quadrature_order);

    // fits[t] approximates v_t(r, x, W_j) for stages t = 2..T.
    std::vector<Fit> fits(std::size_t(T + 1));

    auto regression_continuation = [&](int t_next, double x, double s, double w_rem) {
        if (!(w_rem > 0.0)) return 0.0;
        const auto eb = expected_basis(m, x, s);
        std::vector<double> wx{0.0}, vy{0.0};
        for (std::size_t j = 0; j < J; ++j) {
            double v = 0.0;
            for (int b = 0; b < kBasis; ++b) v += fits[std::size_t(t_next)].coef[j][std::size_t(b)] * eb[std::size_t(b)];
            wx.push_back(grid[j]);
            vy.push_back(std::max(v, 0.0));
        }
        return growth * MonotoneCubic(std::move(wx), std::move(vy))(w_rem);
    };
    // Exact expectation of the terminal value over eta by Gauss-Hermite.
    auto terminal_continuation = [&](double x, double s, double w_rem) {
        if (!(w_rem > 0.0)) return 0.0;
        return growth * gauss_hermite_expectation(rule, m.rho * x, m.sigma_eta, [&](double xn) {
                   return v_terminal(1.0 + m.theta * s + m.gamma * xn, xn, w_rem);
               });
    };

    auto minimise = [&](int t, double r, double x, double w, bool exact_terminal, double tol_rel) {
        auto obj = [&](double s) {
            const double cont = (t + 1 == T && exact_terminal) ? terminal_continuation(x, s, w - s)
                                                                : regression_continuation(t + 1, x, s, w - s);
            return unit_step_cost(m, r, x, s, s, t) + cont;
        };
        return golden_section_min(obj, 0.0, w, tol_rel * w, opt.max_iter);
    };

    // Simulated pre-trade states for stages 2..T: x from its AR(1) marginal,
    // r from an exploratory trade spread around the equal split.
    const std::size_t N = std::size_t(std::max(opt.regression_samples, kBasis + 1));
    std::vector<std::vector<std::array<double, 2>>> states(std::size_t(T + 1));
    {
        double mean = s0.aux, var = 0.0;
        for (int t = 2; t <= T; ++t) {
            mean *= m.rho;
            var = var * m.rho * m.rho + m.sigma_eta * m.sigma_eta;
            NormalStream rng(opt.regression_seed, std::uint64_t(t));
            auto& st = states[std::size_t(t)];
            st.resize(N);
            for (std::size_t i = 0; i < N; ++i) {
                const double x = mean + std::sqrt(var) * rng.next();
                const double s = rng.uniform() * 2.0 * h.total_shares / T;
                st[i] = {1.0 + m.theta * s + m.gamma * x, x};
            }
        }
    }

    sol.policy.stages.resize(static_cast<std::size_t>(T));
    sol.policy.value_samples.resize(static_cast<std::size_t>(T));
    sol.policy.stages[std::size_t(T - 1)] = ClosedLinearPolicy{1.0};

    for (int t = T; t >= 2; --t) {
        const auto& st = states[std::size_t(t)];
        std::vector<std::vector<double>> values(J, std::vector<double>(N)), fr(J, std::vector<double>(N));
        parallel_for(N * J, opt.threads, [&](std::size_t idx) {
            const std::size_t i = idx / J, j = idx % J;
            const double r = st[i][0], x = st[i][1];
            if (t == T) {
                values[j][i] = v_terminal(r, x, grid[j]);
                fr[j][i] = 1.0;
            } else {
                const MinResult res = minimise(t, r, x, grid[j], false, 1e-7);
                values[j][i] = res.value;
                fr[j][i] = res.x / grid[j];
            }
        });
        std::vector<std::array<double, kBasis>> rows(N);
        for (std::size_t i = 0; i < N; ++i) rows[i] = basis(st[i][0], st[i][1]);
        fits[std::size_t(t)] = least_squares(rows, values);
        if (t < T) {
            RegressionPolicy p{grid, {}};
            for (const auto& c : least_squares(rows, fr).coef) p.coefficients.emplace_back(c.begin(), c.end());
            sol.policy.stages[std::size_t(t - 1)] = std::move(p);
        }
    }

    // Stage 1 on the W grid at the initial state.
    {
        std::vector<double> f1(J), v1(J);
        parallel_for(J, opt.threads, [&](std::size_t j) {
            const MinResult res = minimise(1, r0, s0.aux, grid[j], true, 1e-10);
            f1[j] = res.x / grid[j];
            v1[j] = res.value * s0.no_impact_price;
        });
        RegressionPolicy p{grid, {}};
        for (double f : f1) p.coefficients.push_back({f, 0.0, 0.0, 0.0, 0.0, 0.0});
        sol.policy.stages[0] = std::move(p);
        for (std::size_t j = 0; j < J; ++j) sol.policy.value_samples[0].push_back({grid[j], v1[j]});
    }

    // Reporting path: B and eta at their means.
    std::vector<double> trades;
    double w = h.total_shares, r = r0, x = s0.aux, ptilde = s0.no_impact_price;
    for (int t = 1; t <= T; ++t) {
        if (t > 1) {
            auto& vs = sol.policy.value_samples[std::size_t(t - 1)];
            for (double wn : grid) {
                double v = 0.0;
                const auto b = basis(r, x);
                for (std::size_t j = 0; j < J; ++j)
                    if (grid[j] == wn)
                        for (int k = 0; k < kBasis; ++k) v += fits[std::size_t(t)].coef[j][std::size_t(k)] * b[std::size_t(k)];
                vs.push_back({wn, std::max(v, 0.0) * ptilde});
            }
        }
        double s = w;
        if (t < T) {
            const MinResult res = minimise(t, r, x, w, true, 1e-10);
            s = res.x;
            if (t == 1) sol.value = res.value * s0.no_impact_price;
        }
        trades.push_back(s);
        x *= m.rho;
        r = 1.0 + m.theta * s + m.gamma * x;
        ptilde *= std::exp(m.mu_B);
        w -= s;
    }
    sol.schedule = make_schedule(trades, h.total_shares);
    return sol;
}

}  // namespace optexec
