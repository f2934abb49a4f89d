#pragma once

#include <string>
#include <variant>

namespace optexec {

/// Arithmetic walk with linear permanent impact.
struct Benchmark {
    double theta = 0.0;
    double sigma_eps = 1.0;
};

/// Benchmark plus an AR(1) information state X_t entering the price as gamma X_t.
struct Ar1Extra {
    double theta = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    double sigma_eps = 1.0;
    double sigma_eta = 1.0;
};

/// Ar1Extra with X_t read as the bid-ask spread Q_t. Same dynamics, different label.
struct Spread : Ar1Extra {};

/// GBM no-impact price with proportional impact and AR(1) information state.
struct LinearPercentage {
    double mu_B = 0.0;
    double sigma_B = 1.0;
    double theta = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    double sigma_eta = 1.0;
};

/// Price impact scaled by the prevailing price with AR(1) market volume O_t.
struct Liquidity {
    double alpha = 0.0;
    double theta = 0.0;
    double gamma = 0.0;
    double rho = 0.0;
    double sigma_eps = 1.0;
    double sigma_eta = 1.0;
    double beta = 0.0;  ///< theta + gamma, set by make_liquidity
};

Liquidity make_liquidity(double alpha, double theta, double gamma, double rho, double sigma_eps,
                         double sigma_eta);

using ModelParams = std::variant<Benchmark, Ar1Extra, LinearPercentage, Liquidity, Spread>;

/// "benchmark", "ar1", "linear_percentage", "liquidity" or "spread".
std::string model_tag(const ModelParams& params);

/// Throws ErrorKind::validation naming the offending field.
void validate(const ModelParams& params);

struct MarketState {
    double price = 100.0;
    double no_impact_price = 100.0;  ///< LinearPercentage only
    double aux = 0.0;                ///< X_t, O_t or Q_t
    int time_index = 0;
};

struct StepDiagnostics {
    bool volume_clamped = false;
    bool degenerate_price = false;
};

/// One transition of the law of motion. `z1` drives the price noise (eps, or B
/// for LinearPercentage), `z2` the AR(1) innovation eta.
MarketState step(const ModelParams& params, const MarketState& state, double trade, double z1,
                 double z2, StepDiagnostics* diag = nullptr);

/// theta > 3 sigma_eps / 4. Benchmark only.
bool convexity_check(const ModelParams& params);

/// Linear-Gaussian view of Benchmark, Ar1Extra and Spread at a frozen state
/// observation x: the price step is N(theta S + alpha, beta^2) with
/// alpha = gamma rho x and beta = sqrt(gamma^2 sigma_eta^2 + sigma_eps^2).
struct LinearGaussian {
    double theta = 0.0;
    double alpha = 0.0;
    double beta = 1.0;
};

bool is_linear_gaussian(const ModelParams& params);
LinearGaussian linear_gaussian(const ModelParams& params, double x);

}  // namespace optexec
