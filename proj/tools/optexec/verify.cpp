#include <algorithm>
#include <cmath>
#include <filesystem>

#include <fmt/format.h>

#include "commands.hpp"
#include "optexec/attribution.hpp"
#include "optexec/io.hpp"
#include "optexec/rng.hpp"
#include "optexec/simulate.hpp"
#include "optexec/solver.hpp"
#include "optexec/stats.hpp"

namespace fs = std::filesystem;

namespace optexec::cli {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

CheckResult close(std::string name, double got, double want, double tol) {
    const double e = rel(got, want);
    return {std::move(name), e <= tol, fmt::format("got {} want {} rel {:.3g}", got, want, e)};
}

void kernels(std::vector<CheckResult>& out) {
    // Reference values from 40-digit arithmetic.
    out.push_back(close("psi(0)", mills_psi(0.0), 0.79788456080286535588, 1e-14));
    out.push_back(close("psi(7)", mills_psi(7.0), 7.0000000000091347204, 1e-14));
    out.push_back(close("psi(-8.5)", mills_psi(-8.5), 0.11459532016517287413, 1e-12));
    out.push_back(close("psi(-30)", mills_psi(-30.0), 0.033259667433677037071, 1e-12));
    const auto& gh = gauss_hermite_cached(10);
    out.push_back(close("gauss-hermite second moment",
                        gauss_hermite_expectation(gh, 1.0, 2.0, [](double x) { return x * x; }), 5.0, 1e-13));
    out.push_back(close("mixture conditional mean", nln_mixture_expectation({0.1, 0.2}, {1.0, 0.5}, -0.8),
                        0.62589853523238102035, 1e-8));
}

void solvers(std::vector<CheckResult>& out) {
    const Benchmark b{1.3, 1.0};
    for (int T : {2, 5, 10}) {
        const auto r = approximate_recursion(linear_gaussian(ModelParams{b}, 0.0), Formulation::simple, {T, 1.0}, {});
        double worst = 0.0;
        for (int t = 1; t < T; ++t)
            for (double f : r.fractions[static_cast<std::size_t>(t - 1)]) worst = std::max(worst, rel(f, 1.0 / (T - t + 1)));
        out.push_back({fmt::format("benchmark simple recursion T={}", T), worst <= 1e-6,
                       fmt::format("max rel deviation from W/(K+2) {:.3g}", worst)});
    }
    const Ar1Extra a{0.8, 0.5, 0.6, 1.0, 0.7};
    for (int T : {3, 6}) {
        const auto r =
            approximate_recursion(linear_gaussian(ModelParams{a}, 0.4), Formulation::simple, {T, 1.0}, {});
        double worst = 0.0;
        for (int t = 1; t < T; ++t)
            for (double f : r.fractions[static_cast<std::size_t>(t - 1)]) worst = std::max(worst, rel(f, 1.0 / (T - t + 1)));
        out.push_back({fmt::format("ar1 simple recursion T={}", T), worst <= 1e-6,
                       fmt::format("max rel deviation from W/(K+2) {:.3g}", worst)});
    }
    for (const Benchmark m : {Benchmark{1.0, 1.0}, Benchmark{2.5, 0.7}}) {
        const Horizon h{2, 1.0};
        const double root = solve_benchmark_complex(m, h).schedule.trades[0];
        SimConfig c;
        c.model = m;
        c.horizon = h;
        const double grid = brute_force_schedule(c, 100000, Formulation::complex).schedule.trades[0];
        out.push_back({fmt::format("benchmark complex T=2 theta={} sigma={}", m.theta, m.sigma_eps),
                       std::abs(root - grid) <= 1e-4, fmt::format("root {} grid {}", root, grid)});
    }
}

void attribution(std::vector<CheckResult>& out) {
    auto fills = [](std::vector<double> q, const std::vector<double>& path) {
        std::vector<Fill> f;
        for (std::size_t i = 0; i < q.size(); ++i) f.push_back({int(i) + 1, path[i + 1], q[i], Side::buy, "a"});
        return f;
    };
    {
        const std::vector<double> path{100, 101, 102, 104};
        const auto f = fills({10, 20, 30}, path);
        const OrderContext ctx{100, 60, 3, path};
        const double want = 20 * (101 - 100) + 30 * (102 - 100);
        out.push_back(close("simple monotone timing", timing(ctx, f, Formulation::simple), want, 1e-12));
        const double t = timing(ctx, f, Formulation::complex);
        out.push_back({"complex monotone timing", t == 0.0, fmt::format("timing {}", t)});
    }
    {
        const std::vector<double> path{100, 101, 100.5, 100.2, 101, 102};
        const auto f = fills({10, 10, 10, 10, 10}, path);
        const OrderContext ctx{100, 50, 5, path};
        const double want = 40 * (100.5 - 101) + 30 * (100.2 - 100.5);
        const double got = timing(ctx, f, Formulation::complex);
        out.push_back({"complex dip timing", std::abs(got - want) <= 1e-12 * std::abs(want),
                       fmt::format("got {} want {}", got, want)});
    }
    {
        const std::vector<double> path{100, 101};
        const std::vector<Fill> f{{1, 101, 10, Side::buy, "b"}, {1, 101, 10, Side::sell, "s"}};
        const auto a = zero_sum_audit(f, path, Formulation::simple);
        out.push_back({"two-party single interval", a.pass && a.total_impact + a.total_timing == 0.0,
                       fmt::format("impact {} timing {}", a.total_impact, a.total_timing)});
    }
}

void zero_sum(std::vector<CheckResult>& out, const std::string& fixtures) {
    for (Formulation f : {Formulation::simple, Formulation::complex}) {
        int failures = 0;
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 200; ++i) {
            const auto set = generate_balanced_fills(7, i, 4, 1 + int(i % 8));
            const auto a = zero_sum_audit(set.fills, set.price_path, f);
            worst = std::max(worst, std::abs(a.total_impact + a.total_timing) / a.scale);
            failures += !a.pass;
        }
        out.push_back({fmt::format("generated balanced sets ({})", to_string(f)), failures == 0,
                       fmt::format("{} failures, worst relative total {:.3g}", failures, worst)});
    }
    if (fixtures.empty()) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fixtures)) {
        const std::string name = e.path().filename().string();
        if (name.size() > 10 && name.ends_with(".fills.csv")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        out.push_back({"fixtures", false, fmt::format("no *.fills.csv in {}", fixtures)});
        return;
    }
    for (const auto& p : files) {
        const std::string stem = p.filename().string().substr(0, p.filename().string().size() - 10);
        const auto ctx = parse_context(read_file((p.parent_path() / (stem + ".context.json")).string()));
        const auto fills = read_fills_csv(read_file(p.string()));
        for (Formulation f : {Formulation::simple, Formulation::complex}) {
            const auto a = zero_sum_audit(fills, ctx.price_path, f);
            out.push_back({fmt::format("fixture {} ({})", stem, to_string(f)), a.pass,
                           fmt::format("total {}", a.total_impact + a.total_timing)});
        }
    }
}

}  // namespace

std::vector<CheckResult> run_checks(const std::string& selector, const std::string& fixtures_dir) {
    const bool all = selector == "all";
    if (!all && selector != "kernels" && selector != "solvers" && selector != "attribution" && selector != "zero-sum")
        fail(ErrorKind::config,
             fmt::format("unknown selector '{}'; use kernels, solvers, attribution, zero-sum or all", selector));
    std::vector<CheckResult> out;
    auto guarded = [&](const char* group, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            out.push_back({group, false, e.what()});
        }
    };
    if (all || selector == "kernels") guarded("kernels", [&] { kernels(out); });
    if (all || selector == "solvers") guarded("solvers", [&] { solvers(out); });
    if (all || selector == "attribution") guarded("attribution", [&] { attribution(out); });
    if (all || selector == "zero-sum") guarded("zero-sum", [&] { zero_sum(out, fixtures_dir); });
    return out;
}

}  // namespace optexec::cli
