#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace optexec {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011). A draw is a
/// pure function of (key, counter), so every path owns an independent stream
/// keyed by (seed, path index) and results do not depend on scheduling.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t key, std::uint64_t counter_hi, std::uint64_t counter_lo) {
        Block ctr{std::uint32_t(counter_lo), std::uint32_t(counter_lo >> 32),
                  std::uint32_t(counter_hi), std::uint32_t(counter_hi >> 32)};
        std::uint32_t k0 = std::uint32_t(key), k1 = std::uint32_t(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
            ctr = Block{std::uint32_t(p1 >> 32) ^ ctr[1] ^ k0, std::uint32_t(p1),
                        std::uint32_t(p0 >> 32) ^ ctr[3] ^ k1, std::uint32_t(p0)};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return ctr;
    }
};

/// Standard-normal stream for one (seed, stream) pair via Box-Muller.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto b = Philox4x32::generate(seed_, stream_, counter_++);
        const double u1 = to_unit(b[0], b[1]);
        const double u2 = to_unit(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586477 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform on (0, 1).
    double uniform() {
        const auto b = Philox4x32::generate(seed_, stream_, counter_++);
        return to_unit(b[0], b[1]);
    }

private:
    static double to_unit(std::uint32_t lo, std::uint32_t hi) {
        const std::uint64_t x = (std::uint64_t(hi) << 32) | lo;
        return (double(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t seed_, stream_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace optexec
