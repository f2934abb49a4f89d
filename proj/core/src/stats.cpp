#include "optexec/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "optexec/error.hpp"

namespace optexec {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPsiBranch = -3.0;

// psi(-x) = 1/(x + 2/(x + 3/(x + ...))) for x > 0; 60 terms are exact to
// double precision for x >= 3. Above the branch, u + phi/Phi cancels badly.
double psi_continued_fraction(double x) {
    double t = 0.0;
    for (int k = 60; k >= 2; --k) t = k / (x + t);
    return 1.0 / (x + t);
}

}  // namespace

void validate(const Gaussian& g) {
    if (!std::isfinite(g.mu))
        fail(ErrorKind::domain, fmt::format("gaussian mean must be finite, got {}", g.mu));
    if (!std::isfinite(g.sigma) || !(g.sigma > 0.0))
        fail(ErrorKind::domain, fmt::format("gaussian sigma must be finite and > 0, got {}", g.sigma));
}

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double mills_ratio(double u) {
    if (!std::isfinite(u)) fail(ErrorKind::domain, "mills_ratio: non-finite argument");
    if (u < kPsiBranch) return psi_continued_fraction(-u) - u;
    return norm_pdf(u) / norm_cdf(u);
}

double mills_psi(double u) {
    if (!std::isfinite(u)) fail(ErrorKind::domain, "mills_psi: non-finite argument");
    if (u < kPsiBranch) return psi_continued_fraction(-u);
    return u + norm_pdf(u) / norm_cdf(u);
}

double mills_psi_prime(double u) {
    const double psi = mills_psi(u);
    const double r = psi - u;
    return std::max(0.0, 1.0 - r * psi);
}

double truncated_mean_positive(const Gaussian& y) {
    validate(y);
    return y.sigma * mills_psi(y.mu / y.sigma);
}

double mixture_conditional_mean(double mu_x, double sigma_x, double mu_y, double sigma_y,
                                double k) {
    if (!(k < 0.0))
        fail(ErrorKind::unsupported_regime,
             fmt::format("mixture expectation requires k < 0, got k = {}", k));
    if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0) || !std::isfinite(mu_x) || !std::isfinite(mu_y))
        fail(ErrorKind::domain, "mixture expectation: invalid gaussian parameters");

    // Given X = x, the event is Y > c(x) = -k e^{-x}.
    auto given_x = [&](double x, double& num, double& den) {
        const double c = -k * std::exp(-x);
        if (sigma_y == 0.0) {
            den = mu_y > c ? 1.0 : 0.0;
            num = den * (std::exp(x) * mu_y + k);
            return;
        }
        const double zc = (c - mu_y) / sigma_y;
        const double p = norm_cdf(-zc);
        num = std::exp(x) * (mu_y * p + sigma_y * norm_pdf(zc)) + k * p;
        den = p;
    };

    double num = 0.0, den = 0.0;
    if (sigma_x == 0.0) {
        given_x(mu_x, num, den);
    } else if (sigma_y == 0.0) {
        // X > log(-k / mu_y), closed form in X.
        if (mu_y > 0.0) {
            const double x0 = std::log(-k / mu_y);
            den = norm_cdf((mu_x - x0) / sigma_x);
            num = mu_y * std::exp(mu_x + 0.5 * sigma_x * sigma_x) *
                      norm_cdf((mu_x + sigma_x * sigma_x - x0) / sigma_x) +
                  k * den;
        }
    } else {
        // Integrate over z with x = mu_x + sigma_x z. Split where c(x) crosses
        // mu_y; the integrand is steep there when sigma_y is small.
        constexpr double kTail = 12.0;
        const double z_star = mu_y > 0.0 ? (std::log(-k / mu_y) - mu_x) / sigma_x : -kTail;
        auto integrate = [&](bool want_num) {
            auto f = [&](double z) {
                double n, d;
                given_x(mu_x + sigma_x * z, n, d);
                return norm_pdf(z) * (want_num ? n : d);
            };
            using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
            if (z_star > -kTail && z_star < kTail)
                return GK::integrate(f, -kTail, z_star, 15, 1e-13) + GK::integrate(f, z_star, kTail, 15, 1e-13);
            return GK::integrate(f, -kTail, kTail, 15, 1e-13);
        };
        den = integrate(false);
        if (den > 1e-300) num = integrate(true);
    }
    if (!(den > 1e-300))
        fail(ErrorKind::domain, "mixture expectation: conditioning event has probability zero");
    return std::max(0.0, num / den);
}

double nln_mixture_expectation(const Gaussian& x, const Gaussian& y, double k) {
    validate(x);
    validate(y);
    if (!std::isfinite(k)) fail(ErrorKind::domain, "mixture expectation: k must be finite");
    return mixture_conditional_mean(x.mu, x.sigma, y.mu, y.sigma, k);
}

double nln_mixture_closed_form(const Gaussian& x, const Gaussian& y, double k) {
    validate(x);
    validate(y);
    if (!(k < 0.0))
        fail(ErrorKind::unsupported_regime,
             fmt::format("mixture expectation requires k < 0, got k = {}", k));
    const double a = (x.mu + x.sigma * x.sigma) / x.sigma;
    const double b = x.mu / x.sigma;
    const double s = y.sigma;
    const double zk = (k + y.mu) / s;
    const double z0 = y.mu / s;
    const double lead = std::exp(x.mu + 0.5 * x.sigma * x.sigma);
    const double first = norm_cdf(a) / norm_cdf(b) *
                         (y.mu * (norm_cdf(-zk) - norm_cdf(-z0)) -
                          s * kInvSqrt2Pi * (std::exp(-0.5 * zk * zk) - std::exp(-0.5 * z0 * z0)));
    const double second = (1.0 - norm_cdf(a)) / (1.0 - norm_cdf(b)) *
                          (y.mu * (1.0 - norm_cdf(-zk)) + s * kInvSqrt2Pi * std::exp(-0.5 * zk * zk));
    return k + lead * (first + second);
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 128)
        fail(ErrorKind::domain, fmt::format("gauss_hermite: order must be in [1, 128], got {}", n));
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        // Initial guesses for the largest roots, then extrapolation from
        // previously found roots.
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(double(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * rule.nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * rule.nodes[1];
        else
            z = 2.0 * z - rule.nodes[i - 2];
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Orthonormal Hermite recurrence.
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        // Final polish with the converged root.
        double p1 = pim4, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / (pp * pp);
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    // Ascending order.
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
    return rule;
}

const QuadratureRule& gauss_hermite_cached(int n) {
    static std::array<QuadratureRule, 129> cache;
    static std::array<std::once_flag, 129> once;
    if (n < 1 || n > 128)
        fail(ErrorKind::domain, fmt::format("gauss_hermite: order must be in [1, 128], got {}", n));
    std::call_once(once[n], [n] { cache[n] = gauss_hermite(n); });
    return cache[n];
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace optexec
