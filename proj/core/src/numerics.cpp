#include "optexec/numerics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "optexec/error.hpp"

namespace optexec {

RootResult brent_root(const std::function<double(double)>& f, double a, double b, double tol,
                      int max_iter) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a, 0.0, 0};
    if (fb == 0.0) return {b, 0.0, 0};
    if ((fa > 0.0) == (fb > 0.0))
        fail(ErrorKind::solver,
             fmt::format("brent_root: no sign change on [{}, {}] (f = {}, {})", a, b, fa, fb));
    double c = b, fc = fb, d = 0.0, e = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * 2.2e-16 * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return {b, fb, it};
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // Secant or inverse quadratic step.
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    fail(ErrorKind::solver,
         fmt::format("brent_root: no convergence after {} iterations; bracket [{}, {}], residual {}",
                     max_iter, std::min(b, c), std::max(b, c), fb));
}

MinResult golden_section_min(const std::function<double(double)>& f, double a, double b,
                             double tol, int max_iter) {
    constexpr double kInvPhi = 0.6180339887498948482;
    const double lo = a, hi = b;
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int it = 0;
    while (b - a > tol && it < max_iter) {
        ++it;
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    MinResult best = f1 <= f2 ? MinResult{x1, f1, it} : MinResult{x2, f2, it};
    const double flo = f(lo), fhi = f(hi);
    if (flo < best.value) best = {lo, flo, it};
    if (fhi < best.value) best = {hi, fhi, it};
    return best;
}

MinResult global_min(const std::function<double(double)>& f, double a, double b, int grid,
                     double tol) {
    grid = std::max(grid, 2);
    const double h = (b - a) / grid;
    int best = 0;
    double fbest = f(a);
    for (int i = 1; i <= grid; ++i) {
        const double v = f(a + h * i);
        if (v < fbest) {
            fbest = v;
            best = i;
        }
    }
    const double lo = a + h * std::max(0, best - 1);
    const double hi = a + h * std::min(grid, best + 1);
    return golden_section_min(f, lo, hi, tol);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2)
        fail(ErrorKind::config, "MonotoneCubic needs at least two nodes of equal length");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) fail(ErrorKind::config, "MonotoneCubic nodes must increase");
    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        del[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = del[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (del[k - 1] == del[k]) {
            d_[k] = del[k];
        } else if (del[k - 1] * del[k] > 0.0) {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            d_[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    // One-sided three-point end slopes, limited to preserve shape.
    auto end_slope = [](double h0, double h1, double m0, double m1) {
        if (m0 == m1) return m0;
        double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if ((d > 0.0) != (m0 > 0.0) || m0 == 0.0)
            d = 0.0;
        else if ((m0 > 0.0) != (m1 > 0.0) && std::abs(d) > std::abs(3.0 * m0))
            d = 3.0 * m0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], del[0], del[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

double MonotoneCubic::operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const std::size_t k =
        std::size_t(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
}

}  // namespace optexec
