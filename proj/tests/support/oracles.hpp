#pragma once

// Independent reference computations and small random generators shared by
// the unit, property and acceptance tests. Nothing here calls the library's
// numerical kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

/// Seeded generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    double normal() { return std::normal_distribution<double>()(eng_); }
    bool coin() { return uniform(0.0, 1.0) < 0.5; }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t accepted = 0;
};

/// E[Y | Y > 0] by rejection: draws that are not positive are discarded.
inline Estimate rejection_mean(const std::function<double()>& draw, std::size_t n) {
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = draw();
        if (!(y > 0.0)) continue;
        ++k;
        const double d = y - mean;
        mean += d / double(k);
        m2 += d * (y - mean);
    }
    Estimate e;
    e.mean = mean;
    e.accepted = k;
    e.se = k > 1 ? std::sqrt(m2 / double(k - 1) / double(k)) : std::numeric_limits<double>::infinity();
    return e;
}

/// Standard normal cdf and density from the C library only.
inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

/// E[Y | Y > 0] for Y ~ N(mu, sigma^2) by Simpson integration of the density.
inline double truncated_mean_by_quadrature(double mu, double sigma) {
    const double lo = std::max(0.0, mu - 12.0 * sigma), hi = std::max(mu, 0.0) + 12.0 * sigma;
    auto dens = [&](double y) { return phi((y - mu) / sigma) / sigma; };
    const double mass = simpson(dens, lo, hi, 20000);
    const double first = simpson([&](double y) { return y * dens(y); }, lo, hi, 20000);
    return first / mass;
}

/// Argmin of f over the n + 1 equally spaced points of [a, b].
inline double grid_argmin(const std::function<double(double)>& f, double a, double b, int n) {
    double best = a, best_v = f(a);
    for (int i = 1; i <= n; ++i) {
        const double x = a + (b - a) * i / n;
        const double v = f(x);
        if (v < best_v) {
            best_v = v;
            best = x;
        }
    }
    return best;
}

}  // namespace oracle
