#include "optexec/models.hpp"

#include <cmath>

#include <fmt/format.h>

#include "optexec/error.hpp"

namespace optexec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* field, double value, const char* rule) {
    if (!ok || !std::isfinite(value))
        fail(ErrorKind::validation, fmt::format("model.{} = {} violates {}", field, value, rule));
}

void check_positive(const char* field, double v) { require(v > 0.0, field, v, "> 0"); }
void check_finite(const char* field, double v) { require(true, field, v, "finite"); }
void check_rho(double v) { require(std::abs(v) < 1.0, "rho", v, "|rho| < 1"); }

void validate_ar1(const Ar1Extra& m) {
    check_positive("theta", m.theta);
    check_finite("gamma", m.gamma);
    check_rho(m.rho);
    check_positive("sigma_eps", m.sigma_eps);
    check_positive("sigma_eta", m.sigma_eta);
}

}  // namespace

Liquidity make_liquidity(double alpha, double theta, double gamma, double rho, double sigma_eps,
                         double sigma_eta) {
    return Liquidity{alpha, theta, gamma, rho, sigma_eps, sigma_eta, theta + gamma};
}

std::string model_tag(const ModelParams& params) {
    return std::visit(overloaded{
                          [](const Benchmark&) { return std::string("benchmark"); },
                          [](const Spread&) { return std::string("spread"); },
                          [](const Ar1Extra&) { return std::string("ar1"); },
                          [](const LinearPercentage&) { return std::string("linear_percentage"); },
                          [](const Liquidity&) { return std::string("liquidity"); },
                      },
                      params);
}

void validate(const ModelParams& params) {
    std::visit(overloaded{
                   [](const Benchmark& m) {
                       check_positive("theta", m.theta);
                       check_positive("sigma_eps", m.sigma_eps);
                   },
                   [](const Ar1Extra& m) { validate_ar1(m); },
                   [](const Spread& m) { validate_ar1(m); },
                   [](const LinearPercentage& m) {
                       check_finite("mu_B", m.mu_B);
                       check_positive("sigma_B", m.sigma_B);
                       check_positive("theta", m.theta);
                       check_finite("gamma", m.gamma);
                       check_rho(m.rho);
                       check_positive("sigma_eta", m.sigma_eta);
                   },
                   [](const Liquidity& m) {
                       check_finite("alpha", m.alpha);
                       check_positive("theta", m.theta);
                       check_positive("gamma", m.gamma);
                       check_rho(m.rho);
                       check_positive("sigma_eps", m.sigma_eps);
                       check_positive("sigma_eta", m.sigma_eta);
                       require(m.beta == m.theta + m.gamma, "beta", m.beta, "beta == theta + gamma");
                   },
               },
               params);
}

MarketState step(const ModelParams& params, const MarketState& state, double trade, double z1,
                 double z2, StepDiagnostics* diag) {
    if (!(trade >= 0.0))
        fail(ErrorKind::validation, fmt::format("step: trade must be >= 0, got {}", trade));
    MarketState next = state;
    next.time_index = state.time_index + 1;

    auto ar1 = [&](const Ar1Extra& m) {
        next.aux = m.rho * state.aux + m.sigma_eta * z2;
        next.price = state.price + m.theta * trade + m.gamma * next.aux + m.sigma_eps * z1;
    };

    std::visit(overloaded{
                   [&](const Benchmark& m) {
                       next.price = state.price + m.theta * trade + m.sigma_eps * z1;
                   },
                   [&](const Ar1Extra& m) { ar1(m); },
                   [&](const Spread& m) { ar1(m); },
                   [&](const LinearPercentage& m) {
                       const double b = m.mu_B + m.sigma_B * z1;
                       next.no_impact_price = state.no_impact_price * std::exp(b);
                       next.aux = m.rho * state.aux + m.sigma_eta * z2;
                       next.price =
                           next.no_impact_price * (1.0 + m.theta * trade + m.gamma * next.aux);
                   },
                   [&](const Liquidity& m) {
                       double volume = m.rho * state.aux + m.sigma_eta * z2;
                       if (volume < 0.0) {
                           volume = 0.0;
                           if (diag) diag->volume_clamped = true;
                       }
                       if (trade > volume)
                           fail(ErrorKind::liquidity_violation,
                                fmt::format("trade {} exceeds volume {} at t = {}", trade, volume,
                                            next.time_index));
                       next.aux = volume;
                       const double p = state.price;
                       next.price = (m.alpha + 1.0) * p + m.theta * trade * p -
                                    m.gamma * (volume - trade) * p + m.sigma_eps * z1;
                       if (next.price <= 0.0 && diag) diag->degenerate_price = true;
                   },
               },
               params);
    return next;
}

bool convexity_check(const ModelParams& params) {
    const auto* m = std::get_if<Benchmark>(&params);
    if (!m) fail(ErrorKind::unsupported_regime, "convexity_check applies to the benchmark model only");
    return m->theta > 0.75 * m->sigma_eps;
}

bool is_linear_gaussian(const ModelParams& params) {
    return std::holds_alternative<Benchmark>(params) || std::holds_alternative<Ar1Extra>(params) ||
           std::holds_alternative<Spread>(params);
}

LinearGaussian linear_gaussian(const ModelParams& params, double x) {
    if (const auto* b = std::get_if<Benchmark>(&params)) return {b->theta, 0.0, b->sigma_eps};
    const Ar1Extra* a = std::get_if<Ar1Extra>(&params);
    if (!a) a = std::get_if<Spread>(&params);
    if (!a) fail(ErrorKind::unsupported_regime, "model has no linear-Gaussian reduction");
    return {a->theta, a->gamma * a->rho * x, std::hypot(a->gamma * a->sigma_eta, a->sigma_eps)};
}

}  // namespace optexec
