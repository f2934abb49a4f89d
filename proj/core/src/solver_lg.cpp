#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/parallel.hpp"
#include "optexec/solver.hpp"
#include "optexec/stats.hpp"

namespace optexec {

double benchmark_value_simple(const Benchmark& m, double w, int k) {
    const double xi = m.theta / m.sigma_eps;
    return m.sigma_eps * w * mills_psi(xi * w / (k + 2));
}

double ar1_value_simple(const LinearGaussian& lg, double w, int k) {
    const double n = k + 2;
    return lg.theta * w * w / n + lg.alpha * w +
           lg.beta * w * mills_ratio((lg.theta * w + n * lg.alpha) / (n * lg.beta));
}

double lg_step_cost(const LinearGaussian& lg, double s) {
    return lg.beta * mills_psi((lg.theta * s + lg.alpha) / lg.beta);
}

namespace {

double lg_step_cost_prime(const LinearGaussian& lg, double s) {
    return lg.theta * mills_psi_prime((lg.theta * s + lg.alpha) / lg.beta);
}

}  // namespace

double lg_t1_objective(const LinearGaussian& lg, Formulation f, double w, double s) {
    const double weight = f == Formulation::simple ? s : w;
    return weight * lg_step_cost(lg, s) + (w - s) * lg_step_cost(lg, w - s);
}

FocResidual foc_benchmark_complex(const Benchmark& m, double w, double s) {
    const double xi = m.theta / m.sigma_eps;
    const double r1 = mills_ratio(xi * s);
    const double r2 = mills_ratio(xi * (w - s));
    const double d = w - s;
    const double lhs[3] = {w, xi * d * d * r2, d * r2 * r2};
    const double rhs[4] = {2.0 * d, r2 / xi, xi * w * s * r1, w * r1 * r1};
    double res = 0.0, scale = 0.0;
    for (double v : lhs) res += v, scale += std::abs(v);
    for (double v : rhs) res -= v, scale += std::abs(v);
    return {res, scale};
}

FocResidual foc_ar1_complex(const LinearGaussian& lg, double w, double s) {
    const double th = lg.theta, al = lg.alpha, be = lg.beta;
    const double x1 = (th * s + al) / be;
    const double d = w - s;
    const double x2 = (th * d + al) / be;
    const double r1 = mills_ratio(x1), r2 = mills_ratio(x2);
    const double terms[6] = {
        th * w,
        w * be * (th / be) * (-x1 * r1 - r1 * r1),
        -2.0 * th * d,
        -al,
        -be * r2,
        be * (th * d / be) * (x2 * r2 + r2 * r2),
    };
    double res = 0.0, scale = 0.0;
    for (double v : terms) res += v, scale += std::abs(v);
    return {res, scale};
}

std::vector<double> make_w_grid(const Horizon& h, const SolverOptions& opt) {
    if (opt.grid_nodes < 4)
        fail(ErrorKind::config, fmt::format("grid_nodes must be >= 4, got {}", opt.grid_nodes));
    if (!(opt.grid_min_fraction > 0.0) || !(opt.grid_min_fraction * h.T < 1.0))
        fail(ErrorKind::config,
             fmt::format("grid_min_fraction {} cannot resolve a horizon of {} stages "
                         "(need 0 < fraction < 1/T)",
                         opt.grid_min_fraction, h.T));
    std::vector<double> w(std::size_t(opt.grid_nodes));
    const double lo = std::log(h.total_shares * opt.grid_min_fraction);
    const double hi = std::log(h.total_shares);
    for (int i = 0; i < opt.grid_nodes; ++i)
        w[std::size_t(i)] = std::exp(lo + (hi - lo) * i / (opt.grid_nodes - 1));
    w.back() = h.total_shares;
    return w;
}

namespace {

// Backward induction for a stage cost weight * g(S), g(S) = beta psi((theta S
// + alpha)/beta), with alpha frozen. Later-stage policies are stored as
// fractions on log W; values and marginal values at any W come from rolling
// those policies forward to the terminal stage (envelope theorem).
class LgEngine {
public:
    LgEngine(const LinearGaussian& lg, Formulation f, int T, std::vector<double> w_nodes,
             const SolverOptions& opt, bool benchmark_form, const Benchmark* bench)
        : lg_(lg), f_(f), T_(T), w_nodes_(std::move(w_nodes)), opt_(opt),
          benchmark_form_(benchmark_form), bench_(bench ? *bench : Benchmark{}) {
        log_w_.resize(w_nodes_.size());
        for (std::size_t i = 0; i < w_nodes_.size(); ++i) log_w_[i] = std::log(w_nodes_[i]);
        fractions_.assign(std::size_t(std::max(T_ - 1, 0)), {});
        policy_.assign(fractions_.size(), {});
    }

    double cost(double w, double s) const {
        return (f_ == Formulation::simple ? s : w) * lg_step_cost(lg_, s);
    }

    double fraction(int t, double w) const {
        const auto& p = policy_[std::size_t(t - 1)];
        if (!(w > 0.0)) return std::clamp(fractions_[std::size_t(t - 1)].front(), 0.0, 1.0);
        return std::clamp(p(std::log(w)), 0.0, 1.0);
    }

    struct Rollout {
        double value = 0.0;
        double marginal = 0.0;
    };

    // Value and dV/dW from stage t (1..T) onward.
    Rollout rollout(int t, double w) const {
        Rollout r;
        for (int j = t; j < T_; ++j) {
            const double s = fraction(j, w) * w;
            const double g = lg_step_cost(lg_, s);
            r.value += (f_ == Formulation::simple ? s : w) * g;
            if (f_ == Formulation::complex) r.marginal += g;
            w -= s;
        }
        r.value += w * lg_step_cost(lg_, w);
        r.marginal += lg_step_cost(lg_, w) + w * lg_step_cost_prime(lg_, w);
        return r;
    }

    double objective(int t, double w, double s) const { return cost(w, s) + rollout(t + 1, w - s).value; }

    // First-order condition of stage t at (w, s).
    double foc(int t, double w, double s) const {
        if (t == T_ - 1 && f_ == Formulation::complex) {
            return benchmark_form_ ? foc_benchmark_complex(bench_, w, s).residual
                                   : foc_ar1_complex(lg_, w, s).residual;
        }
        const double ds = f_ == Formulation::simple
                              ? lg_step_cost(lg_, s) + s * lg_step_cost_prime(lg_, s)
                              : w * lg_step_cost_prime(lg_, s);
        return ds - rollout(t + 1, w - s).marginal;
    }

    double solve_stage(int t, double w, bool global_search) const {
        if (!(w > 0.0)) return 0.0;
        auto obj = [&](double s) { return objective(t, w, s); };
        const double tol = opt_.root_tol * w;
        if (global_search) return global_min(obj, 0.0, w, 200, tol).x;
        auto g = [&](double s) { return foc(t, w, s); };
        const double g0 = g(0.0), gw = g(w);
        if (g0 < 0.0 && gw > 0.0) return brent_root(g, 0.0, w, tol, opt_.max_iter).x;
        if (g0 == 0.0) return 0.0;
        if (gw == 0.0) return w;
        return golden_section_min(obj, 0.0, w, tol, opt_.max_iter).x;
    }

    void build(int down_to, bool global_search) {
        for (int t = T_ - 1; t >= down_to; --t) {
            std::vector<double> frac(w_nodes_.size());
            parallel_for(w_nodes_.size(), opt_.threads, [&](std::size_t j) {
                frac[j] = std::clamp(solve_stage(t, w_nodes_[j], global_search) / w_nodes_[j], 0.0, 1.0);
            });
            fractions_[std::size_t(t - 1)] = frac;
            policy_[std::size_t(t - 1)] = MonotoneCubic(log_w_, frac);
        }
    }

    std::vector<double> values(int t) const {
        std::vector<double> v(w_nodes_.size());
        for (std::size_t j = 0; j < w_nodes_.size(); ++j) v[j] = rollout(t, w_nodes_[j]).value;
        return v;
    }

    const std::vector<double>& fractions(int t) const { return fractions_[std::size_t(t - 1)]; }
    const std::vector<double>& w_nodes() const { return w_nodes_; }

private:
    LinearGaussian lg_;
    Formulation f_;
    int T_;
    std::vector<double> w_nodes_, log_w_;
    SolverOptions opt_;
    bool benchmark_form_;
    Benchmark bench_;
    std::vector<std::vector<double>> fractions_;
    std::vector<MonotoneCubic> policy_;
};

std::vector<ValueSample> samples(const std::vector<double>& w, const std::vector<double>& v) {
    std::vector<ValueSample> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = {w[i], v[i]};
    return out;
}

Solution forced_single_stage(const std::string& model, Formulation f, const Horizon& h, double value) {
    Solution sol;
    sol.schedule = make_schedule({h.total_shares}, h.total_shares);
    sol.policy.model = model;
    sol.policy.formulation = f;
    sol.policy.stages = {ClosedLinearPolicy{1.0}};
    sol.value = value;
    return sol;
}

const char* kConvexityWarning =
    "convexity: theta <= 3 sigma_eps / 4; stage objectives may be nonconvex, global grid search used";

}  // namespace

RecursionResult approximate_recursion(const LinearGaussian& lg, Formulation f, const Horizon& h,
                                      const SolverOptions& opt, bool global_search) {
    validate(h);
    LgEngine eng(lg, f, h.T, make_w_grid(h, opt), opt, false, nullptr);
    eng.build(1, global_search);
    RecursionResult out;
    out.w_nodes = eng.w_nodes();
    for (int t = 1; t < h.T; ++t) out.fractions.push_back(eng.fractions(t));
    for (int t = 1; t <= h.T; ++t) out.values.push_back(eng.values(t));
    return out;
}

Solution solve_benchmark_simple(const Benchmark& m, const Horizon& h, const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    Solution sol;
    sol.policy.model = "benchmark";
    sol.policy.formulation = Formulation::simple;
    const auto grid = make_w_grid(h, opt);
    for (int t = 1; t <= h.T; ++t) {
        const int k = h.T - t - 1;
        sol.policy.stages.push_back(ClosedLinearPolicy{1.0 / (h.T - t + 1)});
        std::vector<ValueSample> vs;
        for (double w : grid) vs.push_back({w, benchmark_value_simple(m, w, k)});
        sol.policy.value_samples.push_back(std::move(vs));
    }
    sol.schedule = make_schedule(std::vector<double>(std::size_t(h.T), h.total_shares / h.T), h.total_shares);
    sol.value = benchmark_value_simple(m, h.total_shares, h.T - 2);
    if (!convexity_check(ModelParams{m})) sol.warnings.push_back(kConvexityWarning);
    return sol;
}

Solution solve_benchmark_complex(const Benchmark& m, const Horizon& h, const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    const LinearGaussian lg = linear_gaussian(ModelParams{m}, 0.0);
    const bool convex = convexity_check(ModelParams{m});
    if (h.T == 1) {
        Solution sol = forced_single_stage("benchmark", Formulation::complex, h,
                                           h.total_shares * lg_step_cost(lg, h.total_shares));
        if (!convex) sol.warnings.push_back(kConvexityWarning);
        return sol;
    }
    LgEngine eng(lg, Formulation::complex, h.T, make_w_grid(h, opt), opt, true, &m);
    eng.build(1, !convex);

    Solution sol;
    if (!convex) sol.warnings.push_back(kConvexityWarning);
    sol.policy.model = "benchmark";
    sol.policy.formulation = Formulation::complex;
    for (int t = 1; t <= h.T; ++t) {
        if (t < h.T)
            sol.policy.stages.push_back(NumericalPolicy{eng.w_nodes(), {}, eng.fractions(t)});
        else
            sol.policy.stages.push_back(ClosedLinearPolicy{1.0});
        sol.policy.value_samples.push_back(samples(eng.w_nodes(), eng.values(t)));
    }
    std::vector<double> trades;
    double w = h.total_shares;
    for (int t = 1; t < h.T; ++t) {
        const double s = eng.solve_stage(t, w, !convex);
        trades.push_back(s);
        w -= s;
    }
    trades.push_back(w);
    sol.schedule = make_schedule(trades, h.total_shares);
    sol.value = eng.objective(1, h.total_shares, sol.schedule.trades[0]);
    return sol;
}

Solution solve_ar1_simple(const Ar1Extra& m, const Horizon& h, double x0, const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    if (!std::isfinite(x0)) fail(ErrorKind::validation, "x0 must be finite");
    Solution sol;
    sol.policy.model = "ar1";
    sol.policy.formulation = Formulation::simple;
    const auto grid = make_w_grid(h, opt);
    double x = x0;
    for (int t = 1; t <= h.T; ++t) {
        const int k = h.T - t - 1;
        const LinearGaussian lg = linear_gaussian(ModelParams{m}, x);
        sol.policy.stages.push_back(ClosedLinearPolicy{1.0 / (h.T - t + 1)});
        std::vector<ValueSample> vs;
        for (double w : grid) vs.push_back({w, ar1_value_simple(lg, w, k)});
        sol.policy.value_samples.push_back(std::move(vs));
        x *= m.rho;
    }
    sol.schedule = make_schedule(std::vector<double>(std::size_t(h.T), h.total_shares / h.T), h.total_shares);
    sol.value = ar1_value_simple(linear_gaussian(ModelParams{m}, x0), h.total_shares, h.T - 2);
    return sol;
}

Solution solve_ar1_complex(const Ar1Extra& m, const Horizon& h, double x0, const SolverOptions& opt) {
    validate(ModelParams{m});
    validate(h);
    if (!std::isfinite(x0)) fail(ErrorKind::validation, "x0 must be finite");
    const ModelParams params{m};
    if (h.T == 1) {
        const LinearGaussian lg = linear_gaussian(params, x0);
        return forced_single_stage("ar1", Formulation::complex, h,
                                   h.total_shares * lg_step_cost(lg, h.total_shares));
    }
    const auto grid = make_w_grid(h, opt);

    // Certainty-equivalent observations X_{t-1} = rho^{t-1} x0 and the spread of
    // X_{t-1} around them, for the state axis of stages 2..T-1.
    std::vector<double> x_ce(std::size_t(h.T));
    double x = x0, var = 0.0, var_max = 0.0;
    for (int t = 1; t <= h.T; ++t) {
        x_ce[std::size_t(t - 1)] = x;
        var_max = std::max(var_max, var);
        x *= m.rho;
        var = var * m.rho * m.rho + m.sigma_eta * m.sigma_eta;
    }
    const auto [xmin_it, xmax_it] = std::minmax_element(x_ce.begin(), x_ce.end());
    const double half = opt.state_width_sd * std::sqrt(var_max);
    std::vector<double> x_axis;
    const int nx = std::max(2, opt.state_nodes);
    for (int i = 0; i < nx; ++i)
        x_axis.push_back(*xmin_it - half + (*xmax_it - *xmin_it + 2.0 * half) * i / (nx - 1));

    Solution sol;
    sol.policy.model = "ar1";
    sol.policy.formulation = Formulation::complex;
    sol.policy.stages.resize(std::size_t(h.T));
    sol.policy.value_samples.resize(std::size_t(h.T));

    if (h.T >= 3) {
        std::vector<std::vector<std::vector<double>>> by_x(x_axis.size());
        for (std::size_t i = 0; i < x_axis.size(); ++i) {
            LgEngine eng(linear_gaussian(params, x_axis[i]), Formulation::complex, h.T, grid, opt,
                         false, nullptr);
            eng.build(2, false);
            for (int t = 2; t < h.T; ++t) by_x[i].push_back(eng.fractions(t));
        }
        for (int t = 2; t < h.T; ++t) {
            NumericalPolicy p{grid, {StateAxis{"x", x_axis}}, {}};
            for (std::size_t i = 0; i < x_axis.size(); ++i) {
                const auto& f = by_x[i][std::size_t(t - 2)];
                p.fractions.insert(p.fractions.end(), f.begin(), f.end());
            }
            sol.policy.stages[std::size_t(t - 1)] = std::move(p);
        }
    }
    sol.policy.stages[std::size_t(h.T - 1)] = ClosedLinearPolicy{1.0};

    // Reporting path: at stage t the state is frozen at X_{t-1} = rho^{t-1} x0.
    std::vector<double> trades;
    double w = h.total_shares;
    for (int t = 1; t <= h.T; ++t) {
        LgEngine eng(linear_gaussian(params, x_ce[std::size_t(t - 1)]), Formulation::complex, h.T,
                     grid, opt, false, nullptr);
        eng.build(t, false);
        sol.policy.value_samples[std::size_t(t - 1)] = samples(grid, eng.values(t));
        if (t == 1) {
            sol.policy.stages[0] = NumericalPolicy{grid, {StateAxis{"x", {x0}}}, eng.fractions(1)};
            sol.value = eng.objective(1, h.total_shares, eng.solve_stage(1, h.total_shares, false));
        }
        if (t < h.T) {
            const double s = eng.solve_stage(t, w, false);
            trades.push_back(s);
            w -= s;
        }
    }
    trades.push_back(w);
    sol.schedule = make_schedule(trades, h.total_shares);
    return sol;
}

}  // namespace optexec
