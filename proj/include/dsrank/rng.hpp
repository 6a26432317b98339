#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace dsrank {

/**
 * SplitMix64 (Steele, Lea & Flood 2014). Used only to expand seeds into
 * generator state and to derive per-stream seeds.
 */
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Independent sub-streams of one master seed.
enum class Stream : std::uint64_t {
    Network = 1,
    Lgd = 2,
    Synthetic = 3,
};

/**
 * Seed for item `index` of `stream` under `master`. Pure function of its
 * arguments, so work items can be scheduled in any order on any thread.
 */
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept {
    SplitMix64 mix(master);
    std::uint64_t a = mix.next();
    SplitMix64 mix2(a ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
    std::uint64_t b = mix2.next();
    SplitMix64 mix3(b + index * 0x9e3779b97f4a7c15ULL);
    return mix3.next();
}

/**
 * xoshiro256** 1.0 (Blackman & Vigna). State is seeded from a single
 * 64-bit value through SplitMix64, as recommended by the authors.
 * Satisfies UniformRandomBitGenerator.
 *
 * All derived variates (uniform, normal, gamma, beta) are computed here
 * rather than through <random> distributions, whose algorithms are
 * implementation-defined, so streams reproduce across standard libraries.
 */
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256(std::uint64_t seed) noexcept {
        SplitMix64 mix(seed);
        for (auto &word : s_)
            word = mix.next();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; one call consumes two uniforms.
    double normal() noexcept {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Gamma(shape, 1) by Marsaglia & Tsang; shape < 1 uses the U^(1/shape) boost.
    double gamma(double shape) noexcept {
        if (shape < 1.0) {
            const double boost = std::pow(uniform_open(), 1.0 / shape);
            return gamma(shape + 1.0) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    /// Beta(alpha, beta) as X / (X + Y) with X, Y gamma variates.
    double beta(double alpha, double beta_shape) noexcept {
        const double x = gamma(alpha);
        const double y = gamma(beta_shape);
        const double sum = x + y;
        // both gammas can underflow to zero for tiny shapes
        if (sum <= 0.0)
            return uniform() < alpha / (alpha + beta_shape) ? 1.0 : 0.0;
        return x / sum;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

} // namespace dsrank
