#pragma once

#include <vector>

namespace optexec {

struct Gaussian {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Throws ErrorKind::domain unless mu is finite and sigma is finite and > 0.
void validate(const Gaussian& g);

double norm_pdf(double x);
double norm_cdf(double x);

/// phi(u)/Phi(u), stable for all finite u.
double mills_ratio(double u);

/// psi(u) = u + phi(u)/Phi(u). Uses a continued fraction below u = -8.
double mills_psi(double u);

/// d psi / du = 1 - r (u + r) with r = phi/Phi.
double mills_psi_prime(double u);

/// E[Y | Y > 0] = sigma psi(mu/sigma).
double truncated_mean_positive(const Gaussian& y);

/// E[e^X Y + k | e^X Y + k > 0] for independent Gaussian X, Y and k < 0.
/// Evaluated by adaptive Gauss-Kronrod over Y with the X integral in closed form.
double nln_mixture_expectation(const Gaussian& x, const Gaussian& y, double k);

/// Same quantity with degenerate limits allowed: sigma_x == 0 or sigma_y == 0.
double mixture_conditional_mean(double mu_x, double sigma_x, double mu_y, double sigma_y,
                                double k);

/// Term-by-term closed form of the mixture expectation. It equals the
/// conditional mean only when X and Y are degenerate; kept for comparison.
double nln_mixture_closed_form(const Gaussian& x, const Gaussian& y, double k);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Physicists' Gauss-Hermite rule, weight e^{-x^2}; 1 <= n <= 128.
QuadratureRule gauss_hermite(int n);

/// Cached rule; same contract as gauss_hermite.
const QuadratureRule& gauss_hermite_cached(int n);

/// E[f(N(mu, sigma^2))] with an n-point rule.
template <class F>
double gauss_hermite_expectation(const QuadratureRule& rule, double mu, double sigma, F&& f) {
    constexpr double kSqrt2 = 1.4142135623730950488;
    constexpr double kInvSqrtPi = 0.56418958354775628695;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * f(mu + kSqrt2 * sigma * rule.nodes[i]);
    return acc * kInvSqrtPi;
}

/// Pairwise (cascade) summation; result depends only on the order of `v`.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace optexec
