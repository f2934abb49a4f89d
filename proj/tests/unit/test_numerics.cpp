#include <atomic>
#include <cmath>

#include <gtest/gtest.h>

#include "optexec/error.hpp"
#include "optexec/numerics.hpp"
#include "optexec/parallel.hpp"
#include "optexec/rng.hpp"
#include "oracles.hpp"

using namespace optexec;

TEST(Brent, FindsCubicRoot) {
    const auto r = brent_root([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, 1e-14);
    EXPECT_NEAR(r.x, std::cbrt(2.0), 1e-13);
}

TEST(Brent, EndpointRoot) {
    const auto r = brent_root([](double x) { return x; }, 0.0, 1.0, 1e-12);
    EXPECT_EQ(r.x, 0.0);
}

TEST(Brent, NoSignChangeIsSolverError) {
    try {
        brent_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-12);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::solver);
    }
}

TEST(Brent, IterationCapReportsBracket) {
    try {
        brent_root([](double x) { return std::tanh(50.0 * (x - 0.3)); }, 0.0, 1.0, 1e-300, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::solver);
        EXPECT_NE(std::string(e.what()).find("bracket"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos) << e.what();
    }
}

TEST(Golden, InteriorAndBoundaryMinima) {
    EXPECT_NEAR(golden_section_min([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10).x, 0.3, 1e-8);
    EXPECT_EQ(golden_section_min([](double x) { return x; }, 0.0, 1.0, 1e-10).x, 0.0);
    EXPECT_EQ(golden_section_min([](double x) { return -x; }, 0.0, 1.0, 1e-10).x, 1.0);
}

TEST(GlobalMin, EscapesLocalMinimum) {
    auto f = [](double x) { return std::cos(12.0 * x) + 0.3 * x; };
    const double want = oracle::grid_argmin(f, 0.0, 2.0, 200000);
    EXPECT_NEAR(global_min(f, 0.0, 2.0, 200, 1e-10).x, want, 1e-4);
}

TEST(MonotoneCubic, ReproducesLinearData) {
    MonotoneCubic m({0.0, 1.0, 3.0, 4.5}, {1.0, 3.0, 7.0, 10.0});
    for (double x : {0.0, 0.25, 1.0, 2.2, 4.0, 4.5}) EXPECT_NEAR(m(x), 1.0 + 2.0 * x, 1e-14);
}

TEST(MonotoneCubic, PreservesMonotonicity) {
    oracle::Gen g(5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x{0.0}, y{0.0};
        for (int i = 1; i < 12; ++i) {
            x.push_back(x.back() + g.uniform(0.01, 2.0));
            y.push_back(y.back() + (g.coin() ? 0.0 : g.log_uniform(1e-6, 10.0)));
        }
        MonotoneCubic m(x, y);
        double prev = m(x.front());
        for (int k = 1; k <= 2000; ++k) {
            const double v = m(x.front() + (x.back() - x.front()) * k / 2000.0);
            ASSERT_GE(v, prev - 1e-12);
            prev = v;
        }
    }
}

TEST(MonotoneCubic, ConstantBeyondNodes) {
    MonotoneCubic m({1.0, 2.0, 3.0}, {5.0, 6.0, 8.0});
    EXPECT_EQ(m(0.0), 5.0);
    EXPECT_EQ(m(10.0), 8.0);
    EXPECT_EQ(m(2.0), 6.0);
}

TEST(Philox, KnownAnswer) {
    // Reference vector for Philox4x32-10 with zero key and counter.
    const auto b = Philox4x32::generate(0, 0, 0);
    EXPECT_EQ(b[0], 0x6627e8d5u);
    EXPECT_EQ(b[1], 0xe169c58du);
    EXPECT_EQ(b[2], 0xbc57ac4cu);
    EXPECT_EQ(b[3], 0x9b00dbd8u);
}

TEST(NormalStream, MomentsAndIndependenceOfStreams) {
    NormalStream a(42, 0), b(42, 1);
    const int n = 400000;
    double s = 0.0, s2 = 0.0, sab = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = a.next(), y = b.next();
        s += x;
        s2 += x * x;
        sab += x * y;
    }
    EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(double(n)));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(sab / n, 0.0, 5.0 / std::sqrt(double(n)));
}

TEST(NormalStream, ReproducibleAndUniformInUnitInterval) {
    NormalStream a(7, 3), b(7, 3);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
    NormalStream u(1, 1);
    for (int i = 0; i < 10000; ++i) {
        const double x = u.uniform();
        ASSERT_GT(x, 0.0);
        ASSERT_LT(x, 1.0);
    }
}

TEST(ParallelFor, WritesByIndexIndependentOfThreads) {
    std::vector<double> a(1000), b(1000);
    parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = NormalStream(9, i).next(); });
    parallel_for(b.size(), 8, [&](std::size_t i) { b[i] = NormalStream(9, i).next(); });
    EXPECT_EQ(a, b);
}

TEST(ParallelFor, PropagatesException) {
    std::atomic<int> count{0};
    EXPECT_THROW(parallel_for(100, 4,
                              [&](std::size_t i) {
                                  ++count;
                                  if (i == 17) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
