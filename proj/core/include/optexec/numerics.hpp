#pragma once

#include <functional>
#include <vector>

namespace optexec {

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Brent's method on a bracket with f(a) f(b) <= 0. Converges when the
/// bracket is narrower than `tol`. Throws ErrorKind::solver after
/// `max_iter` iterations, reporting the bracket and residual.
RootResult brent_root(const std::function<double(double)>& f, double a, double b, double tol,
                      int max_iter = 200);

struct MinResult {
    double x = 0.0;
    double value = 0.0;
    int iterations = 0;
};

/// Golden-section search for the minimum of f on [a, b]; endpoints are
/// compared at the end so boundary minima are returned exactly.
MinResult golden_section_min(const std::function<double(double)>& f, double a, double b,
                             double tol, int max_iter = 200);

/// Grid scan followed by golden-section refinement around the best node.
MinResult global_min(const std::function<double(double)>& f, double a, double b, int grid,
                     double tol);

/// Fritsch-Carlson monotone cubic (PCHIP). Linear data are reproduced exactly.
/// Outside the node range the end values are held constant.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    bool empty() const { return x_.empty(); }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

private:
    std::vector<double> x_, y_, d_;
};

}  // namespace optexec
