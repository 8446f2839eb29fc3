#pragma once

#include "airs/common.hpp"

#include <array>
#include <cstdint>

namespace airs {

/// Philox4x32-10 counter-based generator.
///
/// State is (key, counter); draws never mutate shared state, so substreams
/// are cheap and collision-free: a stream is identified by a 64-bit id that
/// is folded into the key. Identical (seed, stream) pairs replay the exact
/// same sequence on every platform with IEEE doubles.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
               static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
          ctr_{0, 0, 0, 0} {}

    std::uint32_t next_u32() {
        if (avail_ == 0) refill();
        return block_[--avail_];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cached pair).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        cached_ = r * std::sin(2.0 * kPi * u2);
        have_cached_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// CN(0,1): unit-variance circularly symmetric complex Gaussian.
    cx cnormal() {
        const double s = 1.0 / std::sqrt(2.0);
        return {s * normal(), s * normal()};
    }

    CVec cnormal_vec(Eigen::Index n) {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = cnormal();
        return v;
    }

    CMat cnormal_mat(Eigen::Index r, Eigen::Index c) {
        CMat m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = cnormal();
        return m;
    }

private:
    void refill() {
        std::array<std::uint32_t, 4> x = ctr_;
        std::uint32_t k0 = key_[0] ^ key_[2], k1 = key_[1] ^ key_[3];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ULL * x[0];
            const std::uint64_t p1 = 0xCD9E8D57ULL * x[2];
            const std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t l0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t l1 = static_cast<std::uint32_t>(p1);
            x = {h1 ^ x[1] ^ k0, l1, h0 ^ x[3] ^ k1, l0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        block_ = x;
        avail_ = 4;
        if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
    }

    std::array<std::uint32_t, 4> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> block_{};
    int avail_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Stream-id registry for scenario generation. Link substreams are derived
/// from the scenario seed so that adding users or resizing one link never
/// shifts another link's draws.
namespace stream {
inline constexpr std::uint64_t kPlaceIu = 0x01;
inline constexpr std::uint64_t kPlaceEu = 0x02;
inline constexpr std::uint64_t kApIrs = 0x03;
inline std::uint64_t irs_iu(int i) { return 0x1000 + static_cast<std::uint64_t>(i); }
inline std::uint64_t ap_iu(int i) { return 0x2000 + static_cast<std::uint64_t>(i); }
inline std::uint64_t irs_eu(int j) { return 0x3000 + static_cast<std::uint64_t>(j); }
inline std::uint64_t ap_eu(int j) { return 0x4000 + static_cast<std::uint64_t>(j); }
inline std::uint64_t randomization(int trial) { return 0x5000 + static_cast<std::uint64_t>(trial); }
inline std::uint64_t init_phases(int attempt) { return 0x6000 + static_cast<std::uint64_t>(attempt); }
}  // namespace stream

}  // namespace airs
