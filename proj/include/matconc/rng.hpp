#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace matconc {

/// Identifies one reproducible random stream. Streams for distinct
/// (master_seed, stream_index) pairs are statistically independent and the
/// draws do not depend on evaluation order across streams.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    SeedSpec with_stream(std::uint64_t index) const {
        return SeedSpec{master_seed, index};
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(const SeedSpec& seed) {
    std::uint64_t s = seed.master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= seed.stream_index * 0x9E3779B97F4A7C15ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x632BE59BD9B4E019ULL);
}

}  // namespace detail

/// Child stream derived by hashing the parent spec; used to give every trial
/// (and every independent source within a trial) its own stream, so results
/// cannot depend on scheduling order.
inline SeedSpec substream(const SeedSpec& parent, std::uint64_t index) {
    return SeedSpec{detail::mix_seed(parent), index};
}

/// One pseudo-random stream: mt19937_64 seeded by a splitmix64 hash of
/// (master_seed, stream_index). All distributions are generated by explicit
/// algorithms on top of the raw 64-bit output, so a given SeedSpec yields the
/// same draws on every platform this library is compiled for.
class RandomStream {
public:
    explicit RandomStream(const SeedSpec& seed)
        : engine_(detail::mix_seed(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Symmetric random sign.
    double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

    /// Standard normal via the Marsaglia polar method (spare value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Exponential with unit rate.
    double exponential() { return -std::log1p(-uniform01()); }

    /// Student-t with nu degrees of freedom (Bailey's polar method).
    double student_t(double nu) {
        double u, v, w;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            w = u * u + v * v;
        } while (w > 1.0 || w == 0.0);
        return u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
    }

    /// Gamma(alpha, 1) for alpha >= 1 (Marsaglia-Tsang squeeze).
    double gamma(double alpha) {
        if (alpha < 1.0) {
            throw std::invalid_argument("RandomStream::gamma requires alpha >= 1");
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double dof) { return 2.0 * gamma(dof / 2.0); }

    /// Symmetric Pareto with tail index alpha, scaled to unit variance.
    /// |X| ~ Pareto(alpha, x_m) with x_m = sqrt((alpha-2)/alpha), random sign.
    double pareto_symmetric(double alpha) {
        if (alpha <= 2.0) {
            throw std::invalid_argument("pareto_symmetric requires alpha > 2");
        }
        const double scale = std::sqrt((alpha - 2.0) / alpha);
        const double mag = scale * std::pow(1.0 - uniform01(), -1.0 / alpha);
        return rademacher() * mag;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace matconc
