#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace she {

/// Counter-based Philox4x32-10 block cipher (Salmon et al. 2011) used as the
/// Monte Carlo random source: each 128-bit counter maps to 128 random bits
/// through a pure function of (counter, key), so any (path, step) pair owns
/// a private substream and results do not depend on scheduling order.
///
/// Counter layout: word 0 is the running block index inside a substream,
/// word 1 the time-step index, words 2..3 the 64-bit path index. The 64-bit
/// seed forms the key. A substream can draw 2^32 blocks (2^34 uniforms)
/// before touching the step word, far beyond any simulation here.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t path, std::uint32_t step)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr_{0u, step, static_cast<std::uint32_t>(path),
               static_cast<std::uint32_t>(path >> 32)} {}

    /// Raw generator core: one 10-round pass over an arbitrary counter.
    static std::array<std::uint32_t, 4> block(
        const std::array<std::uint32_t, 4>& counter, std::uint32_t key0,
        std::uint32_t key1) {
        std::array<std::uint32_t, 4> c = counter;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kM4x32A) * c[0];
            const std::uint64_t p1 = std::uint64_t(kM4x32B) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ key0,
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ key1,
                 static_cast<std::uint32_t>(p0)};
            key0 += kW32A;
            key1 += kW32B;
        }
        return c;
    }

    std::uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = block(ctr_, key0_, key1_);
            ++ctr_[0]; // block index; never carries within one substream
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    /// Uniform draw on (0, 1]; never returns 0 so log() is always finite.
    double uniform() {
        return (static_cast<double>(next_u32()) + 1.0) * 0x1p-32;
    }

    /// Standard normal via the Box-Muller pair; the second member of each
    /// pair is cached, so consecutive calls consume one uniform on average.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * kTwoPiHalf * uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    static constexpr std::uint32_t kW32A = 0x9E3779B9u;
    static constexpr std::uint32_t kW32B = 0xBB67AE85u;
    static constexpr std::uint32_t kM4x32A = 0xD2511F53u;
    static constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

private:
    static constexpr double kTwoPiHalf = 3.14159265358979323846;

    std::uint32_t key0_, key1_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace she
