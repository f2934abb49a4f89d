#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "optexec/models.hpp"
#include "optexec/numerics.hpp"

namespace optexec {

enum class Formulation { simple, complex };

std::string to_string(Formulation f);
Formulation parse_formulation(const std::string& s);

struct Horizon {
    int T = 1;
    double total_shares = 1.0;
};

void validate(const Horizon& h);

struct Schedule {
    std::vector<double> trades;     ///< S_1..S_T
    std::vector<double> residuals;  ///< W_1..W_{T+1}
};

/// Builds residuals from trades; the last trade absorbs rounding so W_{T+1} = 0.
Schedule make_schedule(std::vector<double> trades, double total_shares);

/// Throws ErrorKind::validation when a Schedule invariant fails.
void validate(const Schedule& s, const Horizon& h);

/// S = fraction * W.
struct ClosedLinearPolicy {
    double fraction = 1.0;
};

struct StateAxis {
    std::string name;  ///< "x", "price" or "volume"
    std::vector<double> nodes;
};

/// S*(W)/W on a W grid, optionally indexed by up to two state axes.
/// Interpolation: monotone cubic in log W, multilinear across state axes,
/// constant beyond the end nodes.
struct NumericalPolicy {
    std::vector<double> w_nodes;
    std::vector<StateAxis> axes;
    std::vector<double> fractions;  ///< row-major [axis0][axis1][w]

    double fraction(const std::vector<double>& coords, double w) const;
};

/// S*(W)/W from least-squares fits in the state (r, x), r = P/P~, one fit per
/// W node; monotone cubic in log W between nodes.
struct RegressionPolicy {
    std::vector<double> w_nodes;
    std::vector<std::vector<double>> coefficients;  ///< per W node, basis 1, r, x, r^2, r x, x^2

    double fraction(double r, double x, double w) const;
};

using StagePolicy = std::variant<ClosedLinearPolicy, NumericalPolicy, RegressionPolicy>;

struct ValueSample {
    double w = 0.0;
    double v = 0.0;
};

struct PolicyTable {
    std::string model;
    Formulation formulation = Formulation::simple;
    std::vector<StagePolicy> stages;                      ///< stage t at index t - 1
    std::vector<std::vector<ValueSample>> value_samples;  ///< stage t at index t - 1

    /// Trade at stage t (1-based) given the pre-trade state and residual w.
    /// Stage T returns w.
    double trade(int t, const MarketState& state, double w) const;
};

struct SolverOptions {
    int grid_nodes = 64;
    double grid_min_fraction = 1e-3;
    int quadrature_order = 40;
    int recursion_quadrature_order = 12;
    int state_nodes = 9;              ///< x axis of the AR(1) complex policy
    int liquidity_state_nodes = 5;    ///< price and volume axes of the liquidity policy
    double state_width_sd = 4.0;
    double root_tol = 1e-10;  ///< relative to W
    int max_iter = 200;
    int regression_samples = 400;
    int regression_w_nodes = 16;
    std::uint64_t regression_seed = 20240611;
    int threads = 0;  ///< 0: hardware concurrency
    double resolution_tol = 1e-6;
};

struct Solution {
    Schedule schedule;
    PolicyTable policy;
    double value = 0.0;  ///< V_1 at the initial state and W_1 = total shares
    std::vector<std::string> warnings;
};

Solution solve_benchmark_simple(const Benchmark& m, const Horizon& h, const SolverOptions& opt = {});
Solution solve_benchmark_complex(const Benchmark& m, const Horizon& h, const SolverOptions& opt = {});
Solution solve_ar1_simple(const Ar1Extra& m, const Horizon& h, double x0, const SolverOptions& opt = {});
Solution solve_ar1_complex(const Ar1Extra& m, const Horizon& h, double x0, const SolverOptions& opt = {});
Solution solve_gbm_simple(const LinearPercentage& m, const Horizon& h, const MarketState& s0,
                          const SolverOptions& opt = {});
Solution solve_liquidity(const Liquidity& m, const Horizon& h, const MarketState& s0,
                         Formulation f = Formulation::simple, const SolverOptions& opt = {});

/// Dispatch on the model variant. Spread uses the Ar1Extra path.
Solution solve(const ModelParams& params, const Horizon& h, const MarketState& s0, Formulation f,
               const SolverOptions& opt = {});

// ---- closed forms and stage objectives ----

/// sigma W psi(xi W / (K + 2)), xi = theta / sigma.
double benchmark_value_simple(const Benchmark& m, double w, int k);

/// theta W^2/(K+2) + alpha W + beta W phi/Phi((theta W + (K+2) alpha)/((K+2) beta)).
double ar1_value_simple(const LinearGaussian& lg, double w, int k);

/// Conditional expected price step beta psi((theta S + alpha)/beta).
double lg_step_cost(const LinearGaussian& lg, double s);

/// Two-stage objective at T-1: stage cost plus terminal value.
double lg_t1_objective(const LinearGaussian& lg, Formulation f, double w, double s);

struct FocResidual {
    double residual = 0.0;
    double scale = 0.0;  ///< sum of absolute values of the terms
};

/// Complex benchmark first-order condition at T-1 in its rearranged form:
/// W + xi (W-S)^2 r2 + (W-S) r2^2 - [2(W-S) + r2/xi + xi W S r1 + W r1^2].
FocResidual foc_benchmark_complex(const Benchmark& m, double w, double s);

/// Complex AR(1) first-order condition at T-1 (derivative of lg_t1_objective).
FocResidual foc_ar1_complex(const LinearGaussian& lg, double w, double s);

/// V_T(P, O, W) = W s psi(m/s), m = P(alpha + beta W - gamma rho O),
/// s = sqrt(gamma^2 P^2 sigma_eta^2 + sigma_eps^2).
double liquidity_terminal_value(const Liquidity& m, double price, double volume, double w);

/// Stage cost weight * E[dP | dP > 0] for the liquidity law at the pre-trade state.
double liquidity_stage_cost(const Liquidity& m, double price, double volume, double s,
                            double weight);

/// T-1 objective: stage cost + E over (eta, eps) of V_T at the successor state,
/// by tensor Gauss-Hermite of the given order.
double liquidity_t1_objective(const Liquidity& m, Formulation f, double price, double volume,
                              double w, double s, int order);

/// Terminal GBM-model value W E[dP | dP > 0] through the mixture expectation.
double gbm_terminal_value(const LinearPercentage& m, double no_impact_price, double price, double x,
                          double w);

// ---- numerical recursion for the linear-Gaussian family ----

struct RecursionResult {
    std::vector<double> w_nodes;
    /// Stage t (1..T-1) at index t - 1: S*/W on the W grid.
    std::vector<std::vector<double>> fractions;
    /// Stage t (1..T) at index t - 1: V_t on the W grid.
    std::vector<std::vector<double>> values;
};

/// Log-spaced W grid on [S * min_fraction, S]; config error when the grid
/// cannot resolve the horizon.
std::vector<double> make_w_grid(const Horizon& h, const SolverOptions& opt);

/// Backward induction on the W grid with the state frozen (alpha constant).
/// Each stage solves its first-order condition with marginal values obtained
/// by rolling the later-stage policies forward.
RecursionResult approximate_recursion(const LinearGaussian& lg, Formulation f, const Horizon& h,
                                      const SolverOptions& opt, bool global_search = false);

}  // namespace optexec
