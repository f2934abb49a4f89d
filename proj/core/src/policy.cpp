#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "optexec/error.hpp"
#include "optexec/solver.hpp"

namespace optexec {

std::string to_string(Formulation f) { return f == Formulation::simple ? "simple" : "complex"; }

Formulation parse_formulation(const std::string& s) {
    if (s == "simple") return Formulation::simple;
    if (s == "complex") return Formulation::complex;
    fail(ErrorKind::validation, fmt::format("formulation must be 'simple' or 'complex', got '{}'", s));
}

void validate(const Horizon& h) {
    if (h.T < 1) fail(ErrorKind::validation, fmt::format("horizon.T must be >= 1, got {}", h.T));
    if (!std::isfinite(h.total_shares) || !(h.total_shares > 0.0))
        fail(ErrorKind::validation,
             fmt::format("horizon.total_shares must be finite and > 0, got {}", h.total_shares));
}

Schedule make_schedule(std::vector<double> trades, double total_shares) {
    Schedule s;
    const std::size_t T = trades.size();
    s.residuals.assign(T + 1, 0.0);
    double w = total_shares;
    for (std::size_t t = 0; t < T; ++t) {
        s.residuals[t] = w;
        if (t + 1 == T) trades[t] = w;
        w -= trades[t];
    }
    s.residuals[T] = 0.0;
    s.trades = std::move(trades);
    return s;
}

void validate(const Schedule& s, const Horizon& h) {
    const std::size_t T = std::size_t(h.T);
    if (s.trades.size() != T || s.residuals.size() != T + 1)
        fail(ErrorKind::validation, "schedule length does not match the horizon");
    double total = 0.0;
    for (double x : s.trades) total += x;
    const double scale = h.total_shares;
    if (std::abs(total - scale) > 1e-9 * scale)
        fail(ErrorKind::validation, fmt::format("schedule trades sum to {}, expected {}", total, scale));
    if (s.residuals.front() != scale) fail(ErrorKind::validation, "schedule W_1 differs from total shares");
    if (s.residuals.back() != 0.0) fail(ErrorKind::validation, "schedule W_{T+1} is not zero");
    for (std::size_t t = 0; t < T; ++t) {
        if (s.trades[t] < -1e-12)
            fail(ErrorKind::validation, fmt::format("schedule trade S_{} = {} is negative", t + 1, s.trades[t]));
        const double diff = s.residuals[t] - s.residuals[t + 1];
        if (std::abs(diff - s.trades[t]) > 1e-12 * scale)
            fail(ErrorKind::validation, fmt::format("schedule W_{} - W_{} != S_{}", t + 1, t + 2, t + 1));
    }
}

namespace {

// Locate x in ascending nodes: returns lower index and weight of the upper node.
std::pair<std::size_t, double> bracket(const std::vector<double>& nodes, double x) {
    if (nodes.size() == 1 || x <= nodes.front()) return {0, 0.0};
    if (x >= nodes.back()) return {nodes.size() - 2, 1.0};
    const std::size_t k =
        std::size_t(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
    return {k, (x - nodes[k]) / (nodes[k + 1] - nodes[k])};
}

double cubic_in_log_w(const std::vector<double>& w_nodes, const double* f, double w) {
    const std::size_t n = w_nodes.size();
    if (n == 1) return f[0];
    std::vector<double> lx(n), y(f, f + n);
    for (std::size_t i = 0; i < n; ++i) lx[i] = std::log(w_nodes[i]);
    if (!(w > 0.0)) return f[0];
    return MonotoneCubic(std::move(lx), std::move(y))(std::log(w));
}

double state_coordinate(const std::string& axis, const MarketState& s) {
    if (axis == "price") return s.price;
    if (axis == "x" || axis == "volume") return s.aux;
    fail(ErrorKind::config, fmt::format("unknown policy axis '{}'", axis));
}

}  // namespace

double NumericalPolicy::fraction(const std::vector<double>& coords, double w) const {
    const std::size_t nw = w_nodes.size();
    if (axes.size() != coords.size()) fail(ErrorKind::config, "policy axis count mismatch");
    if (axes.empty()) return std::clamp(cubic_in_log_w(w_nodes, fractions.data(), w), 0.0, 1.0);
    std::size_t strides[2] = {nw, nw};
    if (axes.size() == 2) strides[0] = axes[1].nodes.size() * nw;
    double acc = 0.0;
    auto [i0, t0] = bracket(axes[0].nodes, coords[0]);
    const std::size_t n0 = axes[0].nodes.size();
    for (int a = 0; a < 2; ++a) {
        const std::size_t ia = std::min(i0 + a, n0 - 1);
        const double wa = a == 0 ? 1.0 - t0 : t0;
        if (wa == 0.0) continue;
        if (axes.size() == 1) {
            acc += wa * cubic_in_log_w(w_nodes, fractions.data() + ia * nw, w);
            continue;
        }
        auto [i1, t1] = bracket(axes[1].nodes, coords[1]);
        const std::size_t n1 = axes[1].nodes.size();
        for (int b = 0; b < 2; ++b) {
            const std::size_t ib = std::min(i1 + b, n1 - 1);
            const double wb = b == 0 ? 1.0 - t1 : t1;
            if (wb == 0.0) continue;
            acc += wa * wb *
                   cubic_in_log_w(w_nodes, fractions.data() + ia * strides[0] + ib * strides[1], w);
        }
    }
    return std::clamp(acc, 0.0, 1.0);
}

double RegressionPolicy::fraction(double r, double x, double w) const {
    std::vector<double> f(w_nodes.size());
    const double basis[6] = {1.0, r, x, r * r, r * x, x * x};
    for (std::size_t j = 0; j < w_nodes.size(); ++j) {
        double v = 0.0;
        for (std::size_t b = 0; b < coefficients[j].size() && b < 6; ++b)
            v += coefficients[j][b] * basis[b];
        f[j] = std::clamp(v, 0.0, 1.0);
    }
    return std::clamp(cubic_in_log_w(w_nodes, f.data(), w), 0.0, 1.0);
}

double PolicyTable::trade(int t, const MarketState& state, double w) const {
    const int T = int(stages.size());
    if (t < 1 || t > T) fail(ErrorKind::config, fmt::format("policy has no stage {}", t));
    if (t == T || w <= 0.0) return std::max(w, 0.0);
    const StagePolicy& p = stages[std::size_t(t - 1)];
    double f = 0.0;
    if (const auto* c = std::get_if<ClosedLinearPolicy>(&p)) {
        f = c->fraction;
    } else if (const auto* n = std::get_if<NumericalPolicy>(&p)) {
        std::vector<double> coords;
        for (const auto& a : n->axes) coords.push_back(state_coordinate(a.name, state));
        f = n->fraction(coords, w);
    } else {
        const auto& r = std::get<RegressionPolicy>(p);
        f = r.fraction(state.price / state.no_impact_price, state.aux, w);
    }
    return std::clamp(f, 0.0, 1.0) * w;
}

}  // namespace optexec
